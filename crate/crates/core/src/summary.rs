use crate::jsonl::{read_jsonl, JsonlError};
use crate::names::GenderNameTable;
use crate::perturb::GeneratedInput;
use crate::template::{is_title, title_of};
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::path::Path;

/// One line of a summary file.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub input_id: String,
    pub system: String,
    pub summary: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SummaryEntity {
    /// Inclusive token span.
    pub start: usize,
    pub end: usize,
    pub tokens: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SummaryRecord {
    pub input_id: String,
    pub system: String,
    pub text: String,
    pub tokens: Vec<String>,
    pub entities: Vec<SummaryEntity>,
}

/// Pre-detected entities from an external tagger.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NerSideRow {
    pub input_id: String,
    #[serde(default)]
    pub system: Option<String>,
    pub entities: Vec<(usize, usize, String)>,
}

#[derive(Debug, thiserror::Error)]
pub enum SummaryError {
    #[error(transparent)]
    Jsonl(#[from] JsonlError),
    #[error("summaries reference {} unknown input id(s): {}", .0.len(), .0.join(", "))]
    UnknownInputs(Vec<String>),
    #[error("duplicate summary for input {input_id} from system {system}")]
    Duplicate { input_id: String, system: String },
    #[error("side-file entity [{start}, {end}] is out of range for {input_id}")]
    SideSpan { input_id: String, start: usize, end: usize },
}

const SENTENCE_STARTERS: &[&str] = &[
    "The", "A", "An", "In", "On", "At", "But", "And", "Yet", "So", "When", "After", "Before", "While", "As",
    "If", "Then", "This", "That", "These", "Those", "Meanwhile", "According", "Former", "President",
];

const BOUNDARY: &[char] = &['.', ',', ';', ':', '!', '?'];

/// Splits on whitespace and strips surrounding punctuation. A trailing "." is
/// kept on titles, a possessive `'s` is removed, and clause punctuation after
/// a word becomes a token of its own so that name runs stop at it.
pub fn tokenize_summary(text: &str) -> Vec<String> {
    let mut out = Vec::new();
    for raw in text.split_whitespace() {
        let lead = raw.trim_start_matches(|c: char| c.is_ascii_punctuation());
        let tok = if title_of(lead).is_some_and(|t| t.ends_with('.')) && lead.ends_with('.') {
            lead.trim_end_matches(|c: char| c.is_ascii_punctuation() && c != '.')
        } else {
            lead.trim_end_matches(|c: char| c.is_ascii_punctuation())
        };
        let tail = if lead.is_empty() { raw } else { &lead[tok.len()..] };
        let word = tok
            .strip_suffix("'s")
            .or_else(|| tok.strip_suffix("\u{2019}s"))
            .unwrap_or(tok);
        if !word.is_empty() {
            out.push(word.to_string());
        }
        if let Some(b) = tail.chars().find(|c| BOUNDARY.contains(c)) {
            out.push(b.to_string());
        }
    }
    out
}

/// Lower-cased name tokens that trigger entity detection.
#[derive(Debug, Clone, Default)]
pub struct Lexicon {
    names: HashSet<String>,
}

impl Lexicon {
    pub fn new<I: IntoIterator<Item = S>, S: AsRef<str>>(names: I) -> Lexicon {
        Lexicon {
            names: names.into_iter().map(|n| n.as_ref().to_lowercase()).collect(),
        }
    }

    /// All injected and inferred names of `inputs` plus the census names.
    pub fn from_inputs(inputs: &[GeneratedInput], census: Option<&GenderNameTable>) -> Lexicon {
        let mut names = HashSet::new();
        for input in inputs {
            for a in &input.assignments {
                names.insert(a.first.to_lowercase());
                names.extend(a.last.iter().map(|l| l.to_lowercase()));
            }
            for e in &input.entities {
                names.extend(e.first.iter().map(|l| l.to_lowercase()));
                names.extend(e.last.iter().map(|l| l.to_lowercase()));
            }
        }
        if let Some(c) = census {
            names.extend(c.male.keys().cloned());
            names.extend(c.female.keys().cloned());
        }
        Lexicon { names }
    }

    pub fn extend<I: IntoIterator<Item = S>, S: AsRef<str>>(&mut self, names: I) {
        self.names.extend(names.into_iter().map(|n| n.as_ref().to_lowercase()));
    }

    pub fn contains(&self, token: &str) -> bool {
        self.names.contains(&token.to_lowercase())
    }
}

fn capitalized(token: &str) -> bool {
    token.chars().next().is_some_and(char::is_uppercase)
}

/// Maximal runs of capitalized tokens (or titles) containing at least one
/// lexicon name or title. Common sentence-initial words, an unknown first word
/// of a sentence, and anything before the first title are trimmed from the
/// front of a run.
pub fn detect_entities(tokens: &[String], lexicon: &Lexicon) -> Vec<SummaryEntity> {
    let mut out = Vec::new();
    let mut i = 0;
    while i < tokens.len() {
        if !(capitalized(&tokens[i]) || is_title(&tokens[i])) {
            i += 1;
            continue;
        }
        let mut j = i;
        while j + 1 < tokens.len() && (capitalized(&tokens[j + 1]) || is_title(&tokens[j + 1])) {
            j += 1;
        }
        let mut start = i;
        let sentence_initial = i == 0 || BOUNDARY.iter().any(|b| tokens[i - 1].starts_with(*b));
        while start < j
            && !lexicon.contains(&tokens[start])
            && !is_title(&tokens[start])
            && (SENTENCE_STARTERS.contains(&tokens[start].as_str()) || (start == i && sentence_initial))
        {
            start += 1;
        }
        if let Some(t) = (start..=j).find(|&k| is_title(&tokens[k])) {
            start = t;
        }
        let run = &tokens[start..=j];
        if run.iter().any(|t| lexicon.contains(t) || is_title(t))
            && !(run.len() == 1 && SENTENCE_STARTERS.contains(&run[0].as_str()))
        {
            out.push(SummaryEntity {
                start,
                end: j,
                tokens: run.to_vec(),
            });
        }
        i = j + 1;
    }
    out
}

/// Joins summary rows to their inputs and runs detection.
pub fn join_summaries(
    rows: Vec<SummaryRow>,
    inputs: &[GeneratedInput],
    lexicon: &Lexicon,
) -> Result<Vec<SummaryRecord>, SummaryError> {
    let known: HashSet<&str> = inputs.iter().map(|i| i.id.as_str()).collect();
    let unknown: BTreeSet<String> = rows
        .iter()
        .filter(|r| !known.contains(r.input_id.as_str()))
        .map(|r| r.input_id.clone())
        .collect();
    if !unknown.is_empty() {
        return Err(SummaryError::UnknownInputs(unknown.into_iter().collect()));
    }
    let mut seen = HashSet::new();
    let mut out = Vec::with_capacity(rows.len());
    for row in rows {
        if !seen.insert((row.input_id.clone(), row.system.clone())) {
            return Err(SummaryError::Duplicate {
                input_id: row.input_id,
                system: row.system,
            });
        }
        let tokens = tokenize_summary(&row.summary);
        let entities = detect_entities(&tokens, lexicon);
        out.push(SummaryRecord {
            input_id: row.input_id,
            system: row.system,
            text: row.summary,
            tokens,
            entities,
        });
    }
    Ok(out)
}

pub fn load_summaries(
    path: &Path,
    inputs: &[GeneratedInput],
    lexicon: &Lexicon,
) -> Result<Vec<SummaryRecord>, SummaryError> {
    join_summaries(read_jsonl(path)?, inputs, lexicon)
}

/// Replaces detected entities with PERSON spans from an external tagger. Rows
/// without a system apply to every system of that input.
pub fn apply_ner_side_file(records: &mut [SummaryRecord], rows: &[NerSideRow]) -> Result<(), SummaryError> {
    let mut by_key: HashMap<(&str, Option<&str>), &NerSideRow> = HashMap::new();
    for r in rows {
        by_key.insert((r.input_id.as_str(), r.system.as_deref()), r);
    }
    for rec in records.iter_mut() {
        let row = by_key
            .get(&(rec.input_id.as_str(), Some(rec.system.as_str())))
            .or_else(|| by_key.get(&(rec.input_id.as_str(), None)));
        let Some(row) = row else { continue };
        let mut ents = Vec::new();
        for (start, end, label) in &row.entities {
            if start > end || *end >= rec.tokens.len() {
                return Err(SummaryError::SideSpan {
                    input_id: rec.input_id.clone(),
                    start: *start,
                    end: *end,
                });
            }
            if label == "PERSON" {
                ents.push(SummaryEntity {
                    start: *start,
                    end: *end,
                    tokens: rec.tokens[*start..=*end].to_vec(),
                });
            }
        }
        rec.entities = ents;
    }
    Ok(())
}

/// Number of summaries per system.
pub fn systems(records: &[SummaryRecord]) -> BTreeMap<String, usize> {
    let mut out = BTreeMap::new();
    for r in records {
        *out.entry(r.system.clone()).or_insert(0) += 1;
    }
    out
}
