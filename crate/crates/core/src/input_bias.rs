//! Bias already present in the inputs: lexical contrast between documents
//! dominated by one group's identifiers, a keyword topic heuristic, and four
//! extractive baselines for the word-list simulation.

use crate::ingest::AnnotatedDocument;
use crate::measures::{count_identifiers, word_list_inclusion, GroupDistribution, MeasureError, Reference};
use crate::names::IdentifierWordList;
use crate::normalize_token;
use crate::seed::{derive_rng, Rng};
use rand::seq::{index::sample, SliceRandom};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, HashMap};

/// A document as sentences of tokens.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TextDocument {
    pub id: String,
    pub sentences: Vec<Vec<String>>,
}

impl TextDocument {
    pub fn from_annotated(doc: &AnnotatedDocument) -> TextDocument {
        TextDocument {
            id: doc.key(),
            sentences: doc.sentences(),
        }
    }

    pub fn tokens(&self) -> impl Iterator<Item = &String> {
        self.sentences.iter().flatten()
    }
}

/// Documents split by which group's identifiers occur most often. Documents
/// with a tie for the maximum are left out.
pub fn split_by_identifier_majority(docs: &[TextDocument], lists: &IdentifierWordList) -> BTreeMap<String, Vec<usize>> {
    let mut out: BTreeMap<String, Vec<usize>> = lists.group_names().into_iter().map(|g| (g, Vec::new())).collect();
    for (i, d) in docs.iter().enumerate() {
        let counts = count_identifiers(d.sentences.iter().map(Vec::as_slice), lists);
        let max = counts.values().copied().max().unwrap_or(0);
        let leaders: Vec<&String> = counts.iter().filter(|(_, c)| **c == max).map(|(g, _)| g).collect();
        if leaders.len() == 1 {
            out.get_mut(leaders[0]).expect("group exists").push(i);
        }
    }
    out
}

pub const FIGHTIN_ALPHA: f64 = 0.01;
pub const IGNORED_PRONOUNS: [&str; 4] = ["him", "her", "his", "hers"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FightinWordsResult {
    /// Positive z: associated with `group_a`.
    pub z: BTreeMap<String, f64>,
    pub group_a: String,
    pub group_b: String,
    pub docs_a: usize,
    pub docs_b: usize,
}

impl FightinWordsResult {
    /// The `k` tokens most associated with `group_a` (or `group_b`), by z.
    pub fn top(&self, toward_a: bool, k: usize) -> Vec<(String, f64)> {
        let sign = if toward_a { 1.0 } else { -1.0 };
        let mut v: Vec<(String, f64)> = self.z.iter().map(|(t, z)| (t.clone(), sign * z)).collect();
        v.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
        v.truncate(k);
        v
    }
}

/// Lowercased tokens with each paired identifier replaced by its `male/female`
/// marker and the ambiguous object/possessive pronouns dropped.
pub fn marker_tokens<'a>(tokens: impl Iterator<Item = &'a String>, pairs: &[(String, String)]) -> Vec<String> {
    let mut marker: HashMap<&str, String> = HashMap::new();
    for (m, f) in pairs {
        let joined = format!("{m}/{f}");
        marker.insert(m, joined.clone());
        marker.insert(f, joined);
    }
    tokens
        .map(|t| normalize_token(t))
        .filter(|t| !t.is_empty() && !IGNORED_PRONOUNS.contains(&t.as_str()))
        .map(|t| marker.get(t.as_str()).cloned().unwrap_or(t))
        .collect()
}

/// Log-odds ratio with a uniform Dirichlet prior, divided by its approximate
/// standard deviation, for every token seen in either corpus.
pub fn fightin_words_counts(a: &HashMap<String, f64>, b: &HashMap<String, f64>, alpha: f64) -> BTreeMap<String, f64> {
    let mut vocab: Vec<&String> = a.keys().chain(b.keys()).collect();
    vocab.sort();
    vocab.dedup();
    let alpha0 = alpha * vocab.len() as f64;
    let na: f64 = a.values().sum();
    let nb: f64 = b.values().sum();
    vocab
        .into_iter()
        .map(|w| {
            let ya = a.get(w).copied().unwrap_or(0.0);
            let yb = b.get(w).copied().unwrap_or(0.0);
            let delta = ((ya + alpha) / (na + alpha0 - ya - alpha)).ln() - ((yb + alpha) / (nb + alpha0 - yb - alpha)).ln();
            let var = 1.0 / (ya + alpha) + 1.0 / (yb + alpha);
            (w.clone(), delta / var.sqrt())
        })
        .collect()
}

fn token_counts(docs: &[&TextDocument], pairs: &[(String, String)]) -> HashMap<String, f64> {
    let mut c = HashMap::new();
    for d in docs {
        for t in marker_tokens(d.tokens(), pairs) {
            *c.entry(t).or_insert(0.0) += 1.0;
        }
    }
    c
}

/// Fightin' Words contrast between the documents of `group_a` and `group_b`.
pub fn fightin_words(
    docs: &[TextDocument],
    split: &BTreeMap<String, Vec<usize>>,
    group_a: &str,
    group_b: &str,
    pairs: &[(String, String)],
) -> FightinWordsResult {
    let pick = |g: &str| -> Vec<&TextDocument> {
        split.get(g).map(|ix| ix.iter().map(|&i| &docs[i]).collect()).unwrap_or_default()
    };
    let (da, db) = (pick(group_a), pick(group_b));
    FightinWordsResult {
        z: fightin_words_counts(&token_counts(&da, pairs), &token_counts(&db, pairs), FIGHTIN_ALPHA),
        group_a: group_a.to_string(),
        group_b: group_b.to_string(),
        docs_a: da.len(),
        docs_b: db.len(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TopicLabel {
    Sport,
    Family,
    Unknown,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TopicLists {
    pub sport: Vec<String>,
    pub family: Vec<String>,
}

impl Default for TopicLists {
    fn default() -> Self {
        let v = |ws: &[&str]| ws.iter().map(|s| s.to_string()).collect();
        TopicLists {
            sport: v(&["league", "season", "club", "game", "win", "team", "shot"]),
            family: v(&["family", "husband", "wife", "father", "mother", "children", "boys", "girls", "baby"]),
        }
    }
}

/// Majority of sport versus family keyword occurrences; a tie is unknown.
pub fn classify_topic(doc: &TextDocument, lists: &TopicLists) -> TopicLabel {
    let (mut s, mut f) = (0usize, 0usize);
    for t in doc.tokens() {
        let n = normalize_token(t);
        s += usize::from(lists.sport.contains(&n));
        f += usize::from(lists.family.contains(&n));
    }
    match s.cmp(&f) {
        std::cmp::Ordering::Greater => TopicLabel::Sport,
        std::cmp::Ordering::Less => TopicLabel::Family,
        std::cmp::Ordering::Equal => TopicLabel::Unknown,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Baseline {
    Random,
    Lead,
    Topic,
    Sexist,
}

impl Baseline {
    pub const ALL: [Baseline; 4] = [Baseline::Random, Baseline::Lead, Baseline::Topic, Baseline::Sexist];

    pub fn as_str(self) -> &'static str {
        match self {
            Baseline::Random => "random",
            Baseline::Lead => "lead",
            Baseline::Topic => "topic",
            Baseline::Sexist => "sexist",
        }
    }
}

fn random_sentences(n: usize, k: usize, rng: &mut Rng) -> Vec<usize> {
    let mut v = sample(rng, n, k.min(n)).into_vec();
    v.sort_unstable();
    v
}

fn identifier_count(sentence: &[String], lists: &IdentifierWordList, group: &str) -> usize {
    sentence
        .iter()
        .filter(|t| lists.group_of(&normalize_token(t)) == Some(group))
        .count()
}

/// Indices of the selected sentences, ascending.
pub fn baseline_summarize(
    doc: &TextDocument,
    algorithm: Baseline,
    lists: &IdentifierWordList,
    topics: &TopicLists,
    rng: &mut Rng,
) -> Vec<usize> {
    let n = doc.sentences.len();
    match algorithm {
        Baseline::Random => random_sentences(n, 3, rng),
        Baseline::Lead => (0..n.min(3)).collect(),
        Baseline::Topic => {
            let k = match classify_topic(doc, topics) {
                TopicLabel::Family => 1,
                TopicLabel::Unknown => 3,
                TopicLabel::Sport => 6,
            };
            random_sentences(n, k, rng)
        }
        Baseline::Sexist => {
            let group = match classify_topic(doc, topics) {
                TopicLabel::Sport => "male",
                TopicLabel::Family => "female",
                TopicLabel::Unknown => return random_sentences(n, 3, rng),
            };
            let mut order: Vec<usize> = (0..n).collect();
            order.shuffle(rng);
            let counts: Vec<usize> = doc.sentences.iter().map(|s| identifier_count(s, lists, group)).collect();
            order.sort_by_key(|&i| std::cmp::Reverse(counts[i]));
            let mut v: Vec<usize> = order.into_iter().take(3).collect();
            v.sort_unstable();
            v
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationRow {
    pub algorithm: Baseline,
    pub uniform: Option<f64>,
    pub adjusted: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationResult {
    pub documents: usize,
    pub input_counts: BTreeMap<String, u64>,
    pub rows: Vec<SimulationRow>,
}

/// Word-list inclusion of every baseline, against the uniform distribution and
/// against the identifier distribution of the inputs.
pub fn simulation_experiment(
    docs: &[TextDocument],
    lists: &IdentifierWordList,
    topics: &TopicLists,
    seed: u64,
) -> Result<SimulationResult, MeasureError> {
    let input_counts = count_identifiers(docs.iter().flat_map(|d| d.sentences.iter().map(Vec::as_slice)), lists);
    let reference = Reference::Given(GroupDistribution::from_counts(&input_counts)?);
    let rows = Baseline::ALL
        .iter()
        .map(|&alg| {
            let per_doc: Vec<BTreeMap<String, u64>> = docs
                .par_iter()
                .map(|d| {
                    let mut rng = derive_rng(seed, &["simulate", alg.as_str(), &d.id]);
                    let picked = baseline_summarize(d, alg, lists, topics, &mut rng);
                    count_identifiers(picked.iter().map(|&i| d.sentences[i].as_slice()), lists)
                })
                .collect();
            let mut total: BTreeMap<String, u64> = lists.group_names().into_iter().map(|g| (g, 0)).collect();
            for c in per_doc {
                for (g, n) in c {
                    *total.entry(g).or_default() += n;
                }
            }
            SimulationRow {
                algorithm: alg,
                uniform: word_list_inclusion(&total, &Reference::Uniform).ok(),
                adjusted: word_list_inclusion(&total, &reference).ok(),
            }
        })
        .collect();
    Ok(SimulationResult {
        documents: docs.len(),
        input_counts,
        rows,
    })
}
