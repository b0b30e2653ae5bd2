//! Synthetic data: an annotated news-like corpus for fixtures and tests, a
//! topic-correlated text corpus for the baseline simulation, and scripted
//! summarizers with known behaviour.

use crate::ingest::{AnnotatedDocument, MentionSpan, NamedEntitySpan, Token};
use crate::input_bias::TextDocument;
use crate::perturb::GeneratedInput;
use crate::seed::{derive_rng, Rng};
use crate::summary::SummaryRow;
use crate::template::ContentWordAnnotation;
use crate::Gender;
use rand::seq::SliceRandom;
use rand::Rng as _;
use std::collections::BTreeMap;

const MALE_FIRST: &[&str] = &[
    "Robert", "Thomas", "Daniel", "George", "Edward", "Frank", "Henry", "Walter", "Arthur", "Carl", "Peter",
    "Victor", "Howard", "Martin", "Russell",
];
const FEMALE_FIRST: &[&str] = &[
    "Susan", "Karen", "Helen", "Nancy", "Carol", "Janet", "Ruth", "Diane", "Joyce", "Alice", "Laura", "Irene",
    "Doris", "Gloria", "Evelyn",
];
const LAST: &[&str] = &[
    "Levin", "Hartley", "Okafor", "Brennan", "Castillo", "Dunmore", "Feldman", "Garrison", "Holloway",
    "Ingram", "Kowalski", "Lindqvist", "Marlow", "Nakamura", "Prescott", "Quinlan", "Redfield", "Sandoval",
    "Thornbury", "Whitaker",
];
const MONONYMS: &[&str] = &["Madonna", "Pele", "Cher", "Prince"];
const ORGS: &[&[&str]] = &[
    &["United", "Nations"],
    &["Federal", "Reserve"],
    &["Red", "Cross"],
    &["World", "Bank"],
    &["City", "Council"],
];
const PLACES: &[&str] = &["London", "Chicago", "Lagos", "Boston", "Denver", "Madrid"];
const DAYS: &[&str] = &["Monday", "Tuesday", "Wednesday", "Thursday", "Friday"];
const NOUNS: &[&str] = &["plan", "report", "budget", "proposal", "contract", "decision", "result"];
const ADJS: &[&str] = &["unusual", "final", "important", "disappointing", "welcome"];
const VERBS: &[&str] = &["reviewed", "rejected", "defended", "signed", "announced", "questioned"];
const RELATIONS: &[&str] = &["lawyer", "assistant", "driver", "neighbor"];
/// (male, female, neutral) role nouns annotated as content words.
const ROLES: &[(&str, &str, &str)] = &[
    ("chairman", "chairwoman", "chair"),
    ("spokesman", "spokeswoman", "spokesperson"),
    ("businessman", "businesswoman", "businessperson"),
];

#[derive(Debug, Clone)]
struct Person {
    chain: String,
    gender: Gender,
    first: String,
    last: Option<String>,
    title: Option<&'static str>,
}

#[derive(Default)]
struct DocBuilder {
    tokens: Vec<Token>,
    mentions: Vec<MentionSpan>,
    entities: Vec<NamedEntitySpan>,
    sentence: usize,
}

impl DocBuilder {
    fn push(&mut self, text: &str, pos: &str) -> usize {
        let index = self.tokens.len();
        self.tokens.push(Token {
            index,
            text: text.to_string(),
            sentence: self.sentence,
            pos: pos.to_string(),
        });
        index
    }

    fn words(&mut self, text: &str) {
        for w in text.split_whitespace() {
            let pos = match w {
                "." | "," => w,
                "the" | "The" | "a" => "DT",
                "said" | "told" | "added" | "thanked" | "described" | "met" | "was" | "had" | "arrived" => "VBD",
                "on" | "in" | "that" | "as" | "of" | "with" => "IN",
                "would" => "MD",
                _ => "NN",
            };
            self.push(w, pos);
        }
    }

    fn mention(&mut self, start: usize, end: usize, chain: &str) {
        self.mentions.push(MentionSpan {
            start,
            end,
            chain: Some(chain.to_string()),
        });
    }

    fn entity(&mut self, start: usize, end: usize, label: &str) {
        self.entities.push(NamedEntitySpan {
            start,
            end,
            label: label.to_string(),
        });
    }

    /// Full name with a PERSON span; returns the token range.
    fn full_name(&mut self, p: &Person) -> (usize, usize) {
        let s = self.push(&p.first, "NNP");
        let e = match &p.last {
            Some(l) => self.push(l, "NNP"),
            None => s,
        };
        self.entity(s, e, "PERSON");
        self.mention(s, e, &p.chain);
        (s, e)
    }

    /// Short reference: title + last name, the bare last name, or the mononym.
    fn short_name(&mut self, p: &Person, rng: &mut Rng) {
        match (&p.last, p.title) {
            (Some(l), Some(t)) => {
                let s = self.push(t, "NNP");
                let e = self.push(l, "NNP");
                self.entity(e, e, "PERSON");
                self.mention(s, e, &p.chain);
            }
            (Some(l), None) if rng.gen_bool(0.5) => {
                let s = self.push(l, "NNP");
                self.entity(s, s, "PERSON");
                self.mention(s, s, &p.chain);
            }
            _ => {
                self.full_name(p);
            }
        }
    }

    fn pronoun(&mut self, p: &Person, kind: usize, capital: bool) {
        let (m, f, pos) = [
            ("he", "she", "PRP"),
            ("him", "her", "PRP"),
            ("his", "her", "PRP$"),
            ("himself", "herself", "PRP"),
        ][kind];
        let w = if p.gender == Gender::Male { m } else { f };
        let w = if capital {
            let mut c = w.chars();
            c.next().map(|x| x.to_uppercase().chain(c).collect()).unwrap_or_default()
        } else {
            w.to_string()
        };
        let i = self.push(&w, pos);
        self.mention(i, i, &p.chain);
    }

    fn end_sentence(&mut self) {
        self.push(".", ".");
        self.sentence += 1;
    }

    fn org(&mut self, rng: &mut Rng) {
        let org = ORGS.choose(rng).expect("non-empty");
        let s = self.tokens.len();
        for w in *org {
            self.push(w, "NNP");
        }
        self.entity(s, self.tokens.len() - 1, "ORG");
    }
}

fn pick<'a>(rng: &mut Rng, xs: &'a [&'a str]) -> &'a str {
    xs.choose(rng).expect("non-empty")
}

/// An annotated corpus plus content-word annotations for it.
#[derive(Debug, Clone, Default)]
pub struct FixtureCorpus {
    pub documents: Vec<AnnotatedDocument>,
    pub content_words: Vec<ContentWordAnnotation>,
}

/// Generates `n` news-like documents with person chains (full names, titles,
/// bare last names, every gendered pronoun form, possessive nesting), ORG and
/// GPE spans, and an occasional document without any person.
pub fn fixture_corpus(n: usize, seed: u64) -> FixtureCorpus {
    let mut out = FixtureCorpus::default();
    for d in 0..n {
        let id = format!("fixture/{d:03}");
        let mut rng = derive_rng(seed, &["fixture", &id]);
        let mut b = DocBuilder::default();
        let n_people = if d % 17 == 5 { 0 } else { rng.gen_range(1..=4) };
        let mut firsts: Vec<&str> = Vec::new();
        let mut lasts: Vec<&str> = LAST.to_vec();
        lasts.shuffle(&mut rng);
        let people: Vec<Person> = (0..n_people)
            .map(|k| {
                let gender = if rng.gen_bool(0.5) { Gender::Male } else { Gender::Female };
                let name = pick(&mut rng, MONONYMS);
                if k > 0 && rng.gen_bool(0.08) && !firsts.contains(&name) {
                    firsts.push(name);
                    return Person {
                        chain: (k + 1).to_string(),
                        gender,
                        first: name.to_string(),
                        last: None,
                        title: None,
                    };
                }
                let pool = if gender == Gender::Male { MALE_FIRST } else { FEMALE_FIRST };
                let first = loop {
                    let f = pick(&mut rng, pool);
                    if !firsts.contains(&f) {
                        break f;
                    }
                };
                firsts.push(first);
                let title = match (gender, rng.gen_range(0..4)) {
                    (_, 0 | 1) => None,
                    (Gender::Male, _) => Some("Mr."),
                    (Gender::Female, 2) => Some("Mrs."),
                    (Gender::Female, _) => Some("Ms."),
                };
                Person {
                    chain: (k + 1).to_string(),
                    gender,
                    first: first.to_string(),
                    last: Some(lasts[k].to_string()),
                    title,
                }
            })
            .collect();
        // opening sentence
        b.words("The");
        b.org(&mut rng);
        b.words(&format!("met in {} on {} .", pick(&mut rng, PLACES), pick(&mut rng, DAYS)));
        let place = b.tokens.len() - 4;
        b.entity(place, place, "GPE");
        b.sentence += 1;
        for p in &people {
            let mononym = p.last.is_none();
            // introduction, sometimes with a gendered role noun
            b.full_name(p);
            if !mononym && rng.gen_bool(0.35) {
                let (m, f, neutral) = *ROLES.choose(&mut rng).expect("non-empty");
                b.words(", the");
                let at = b.push(if p.gender == Gender::Male { m } else { f }, "NN");
                b.words(",");
                out.content_words.push(ContentWordAnnotation {
                    document: id.clone(),
                    start: at,
                    end: at,
                    entities: vec![p.chain.clone()],
                    male: m.into(),
                    female: f.into(),
                    neutral: Some(neutral.into()),
                });
            }
            b.words(&format!("said the {} was {}", pick(&mut rng, NOUNS), pick(&mut rng, ADJS)));
            b.end_sentence();
            if mononym {
                b.words("Fans of");
                b.full_name(p);
                b.words(&format!("{} the {}", pick(&mut rng, VERBS), pick(&mut rng, NOUNS)));
                b.end_sentence();
                continue;
            }
            for _ in 0..rng.gen_range(1..=3) {
                match rng.gen_range(0..5) {
                    0 => {
                        b.short_name(p, &mut rng);
                        b.words("told reporters that");
                        b.pronoun(p, 0, false);
                        b.words(&format!("would sign the {}", pick(&mut rng, NOUNS)));
                    }
                    1 => {
                        b.pronoun(p, 0, true);
                        b.words(&format!("{}", pick(&mut rng, VERBS)));
                        b.pronoun(p, 2, false);
                        b.words(&format!("{} in {}", pick(&mut rng, NOUNS), pick(&mut rng, PLACES)));
                        let g = b.tokens.len() - 1;
                        b.entity(g, g, "GPE");
                    }
                    2 => {
                        b.words("The");
                        b.org(&mut rng);
                        b.words("thanked");
                        b.pronoun(p, 1, false);
                        b.words(&format!("on {}", pick(&mut rng, DAYS)));
                    }
                    3 => {
                        b.pronoun(p, 0, true);
                        b.words("described");
                        b.pronoun(p, 3, false);
                        b.words(&format!("as {}", pick(&mut rng, ADJS)));
                    }
                    _ => {
                        // possessive nesting: [[Levin] 's lawyer] is its own chain
                        let start = b.tokens.len();
                        b.short_name(p, &mut rng);
                        b.push("'s", "POS");
                        let rel = b.push(pick(&mut rng, RELATIONS), "NN");
                        let other = format!("{}0{}", p.chain, rel);
                        b.mention(start, rel, &other);
                        b.words("arrived with the");
                        b.push(pick(&mut rng, NOUNS), "NN");
                        b.end_sentence();
                        b.words("The");
                        let s = b.push(pick(&mut rng, RELATIONS), "NN");
                        b.mention(s - 1, s, &other);
                        b.words("said little");
                    }
                }
                b.end_sentence();
            }
        }
        if people.len() >= 2 && people.iter().all(|p| p.last.is_some()) && rng.gen_bool(0.5) {
            // two people governed by one plural content word
            let (a, c) = (&people[0], &people[1]);
            b.short_name(a, &mut rng);
            b.words("and");
            b.short_name(c, &mut rng);
            b.words("are");
            let mixed = a.gender != c.gender;
            let word = match (mixed, a.gender) {
                (true, _) => "partners",
                (false, Gender::Male) => "brothers",
                (false, Gender::Female) => "sisters",
            };
            let at = b.push(word, "NNS");
            if !mixed {
                out.content_words.push(ContentWordAnnotation {
                    document: id.clone(),
                    start: at,
                    end: at,
                    entities: vec![a.chain.clone(), c.chain.clone()],
                    male: "brothers".into(),
                    female: "sisters".into(),
                    neutral: Some("siblings".into()),
                });
            }
            b.words("in business");
            b.end_sentence();
        }
        b.words(&format!("The {} will be {} on {}", pick(&mut rng, NOUNS), pick(&mut rng, VERBS), pick(&mut rng, DAYS)));
        b.end_sentence();
        out.documents
            .push(AnnotatedDocument::from_parts(id, 0, b.tokens, b.mentions, b.entities));
    }
    out
}

/// Parameters of the topic-correlated text corpus.
#[derive(Debug, Clone, PartialEq)]
pub struct TopicCorpusConfig {
    pub documents: usize,
    pub min_sentences: usize,
    pub max_sentences: usize,
    pub p_sport: f64,
    pub p_family: f64,
    /// Share of male identifiers in sport, family and other documents.
    pub male_share_sport: f64,
    pub male_share_family: f64,
    pub male_share_other: f64,
    /// Probability that a sentence carries a topic keyword.
    pub topic_sentence_rate: f64,
    /// Probability that a sentence carries an identifier (tried twice).
    pub identifier_rate: f64,
}

impl Default for TopicCorpusConfig {
    fn default() -> Self {
        TopicCorpusConfig {
            documents: 5000,
            min_sentences: 6,
            max_sentences: 14,
            p_sport: 0.4,
            p_family: 0.35,
            male_share_sport: 0.85,
            male_share_family: 0.4,
            male_share_other: 0.65,
            topic_sentence_rate: 0.5,
            identifier_rate: 0.45,
        }
    }
}

const SPORT_WORDS: &[&str] = &["league", "season", "club", "game", "win", "team", "shot"];
const FAMILY_WORDS: &[&str] = &["family", "husband", "wife", "children", "baby"];
const FILLER: &[&str] = &[
    "the", "report", "city", "said", "new", "year", "plan", "after", "week", "market", "over", "people", "council",
    "price", "road", "school", "morning", "later",
];
const MALE_IDS: &[&str] = &["he", "man", "son", "brother", "uncle", "men", "himself", "nephew"];
const FEMALE_IDS: &[&str] = &["she", "woman", "daughter", "sister", "aunt", "women", "herself", "niece"];

/// Documents whose topic (sport, family or neither) shifts the share of male
/// identifiers. Sentence counts and identifier rates do not depend on topic.
pub fn topic_corpus(config: &TopicCorpusConfig, seed: u64) -> Vec<TextDocument> {
    (0..config.documents)
        .map(|i| {
            let id = format!("topic-{i:05}");
            let mut rng = derive_rng(seed, &["topic-corpus", &id]);
            let u: f64 = rng.gen();
            let (words, male_share): (&[&str], f64) = if u < config.p_sport {
                (SPORT_WORDS, config.male_share_sport)
            } else if u < config.p_sport + config.p_family {
                (FAMILY_WORDS, config.male_share_family)
            } else {
                (&[], config.male_share_other)
            };
            let n = rng.gen_range(config.min_sentences..=config.max_sentences);
            let sentences = (0..n)
                .map(|_| {
                    let mut s: Vec<String> = (0..rng.gen_range(6..12)).map(|_| pick(&mut rng, FILLER).to_string()).collect();
                    if !words.is_empty() && rng.gen_bool(config.topic_sentence_rate) {
                        let at = rng.gen_range(0..=s.len());
                        s.insert(at, pick(&mut rng, words).to_string());
                    }
                    for _ in 0..2 {
                        if rng.gen_bool(config.identifier_rate) {
                            let pool = if rng.gen_bool(male_share) { MALE_IDS } else { FEMALE_IDS };
                            let at = rng.gen_range(0..=s.len());
                            s.insert(at, pick(&mut rng, pool).to_string());
                        }
                    }
                    s.push(".".into());
                    s
                })
                .collect();
            TextDocument { id, sentences }
        })
        .collect()
}

/// Summaries that repeat their input verbatim.
pub fn identity_summaries(inputs: &[GeneratedInput], system: &str) -> Vec<SummaryRow> {
    inputs
        .iter()
        .map(|i| SummaryRow {
            input_id: i.id.clone(),
            system: system.to_string(),
            summary: i.text.clone(),
        })
        .collect()
}

/// The first three sentences of each input.
pub fn lead_summaries(inputs: &[GeneratedInput], system: &str) -> Vec<SummaryRow> {
    inputs
        .iter()
        .map(|i| SummaryRow {
            input_id: i.id.clone(),
            system: system.to_string(),
            summary: i
                .sentence_tokens()
                .into_iter()
                .take(3)
                .map(|s| s.join(" "))
                .collect::<Vec<_>>()
                .join(" "),
        })
        .collect()
}

fn entity_name(first: Option<&str>, last: Option<&str>) -> Option<String> {
    match (first, last) {
        (Some(f), Some(l)) if f != l => Some(format!("{f} {l}")),
        (_, Some(l)) => Some(l.to_string()),
        (Some(f), None) => Some(f.to_string()),
        (None, None) => None,
    }
}

/// Summaries that name each assigned entity of an input with a probability
/// depending on its group; unlisted groups are always kept.
pub fn inclusion_biased_summaries(
    inputs: &[GeneratedInput],
    keep: &BTreeMap<String, f64>,
    seed: u64,
    system: &str,
) -> Vec<SummaryRow> {
    inputs
        .iter()
        .map(|input| {
            let mut rng = derive_rng(seed, &["biased-summary", system, &input.id]);
            let mut parts = vec!["The meeting ended .".to_string()];
            for e in &input.entities {
                let Some(group) = &e.group else { continue };
                let p = keep.get(group).copied().unwrap_or(1.0);
                if rng.gen_bool(p) {
                    if let Some(name) = entity_name(e.first.as_deref(), e.last.as_deref()) {
                        parts.push(format!("{name} spoke ."));
                    }
                }
            }
            SummaryRow {
                input_id: input.id.clone(),
                system: system.to_string(),
                summary: parts.join(" "),
            }
        })
        .collect()
}

/// A summary built from known input entities with optional planted names.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConstructedSummary {
    pub row: SummaryRow,
    /// Input entity ids the summary names.
    pub constructed: Vec<String>,
    pub planted: Vec<String>,
}

/// One summary per input naming every input entity (by assigned first name and
/// chain last name, or title and last name), with the `planted` names
/// appended to the first inputs, one per summary.
pub fn constructed_summaries(
    inputs: &[GeneratedInput],
    planted: &[String],
    seed: u64,
    system: &str,
) -> Vec<ConstructedSummary> {
    inputs
        .iter()
        .enumerate()
        .map(|(k, input)| {
            let mut rng = derive_rng(seed, &["constructed", system, &input.id]);
            let mut parts = Vec::new();
            let mut constructed = Vec::new();
            for e in &input.entities {
                let Some(name) = entity_name(e.first.as_deref(), e.last.as_deref()) else { continue };
                let text = match (e.gender, &e.last, rng.gen_bool(0.3)) {
                    (Some(Gender::Male), Some(l), true) => format!("Mr. {l}"),
                    (Some(Gender::Female), Some(l), true) => format!("Ms. {l}"),
                    _ => name,
                };
                parts.push(format!("On {} , {text} gave a speech .", pick(&mut rng, DAYS)));
                constructed.push(e.id.clone());
            }
            let mut plants = Vec::new();
            if let Some(h) = planted.get(k) {
                parts.push(format!("Meanwhile {h} was quoted ."));
                plants.push(h.clone());
            }
            ConstructedSummary {
                row: SummaryRow {
                    input_id: input.id.clone(),
                    system: system.to_string(),
                    summary: parts.join(" "),
                },
                constructed,
                planted: plants,
            }
        })
        .collect()
}
