//! Tooling for probing demographic bias in summarization systems.
//!
//! The crate has two halves. The first turns a coreference and NE annotated
//! news corpus into entity templates and fills them with controlled gender or
//! race assignments, so that summarizer behaviour can be compared across inputs
//! that differ only in the demographic coding of their people. The second half
//! ingests the summaries those systems produced, aligns summary entities back
//! to the inputs, classifies hallucinated names and computes inclusion,
//! hallucination and representation bias scores with bootstrap intervals.
//!
//! Module map:
//!
//! * [`ingest`]: CoNLL-2012 style reader/writer and annotation checks
//! * [`template`]: person entity discovery, name inference and slot templates
//! * [`names`]: census, BBQ-style and identifier word list inventories
//! * [`perturb`]: assignment schemes and corpus generation
//! * [`summary`]: summary ingestion, tokenization and person detection
//! * [`align`]: summary to input entity alignment and hallucination tagging
//! * [`classify`]: gender classification of hallucinated names
//! * [`measures`]: the four bias scores and the d/s bootstrap
//! * [`input_bias`]: log-odds lexical contrast, topic heuristic, baselines
//! * [`pipeline`] and [`report`]: end-to-end orchestration and rendering

pub mod align;
pub mod classify;
pub mod ingest;
pub mod input_bias;
pub mod jsonl;
pub mod measures;
pub mod names;
pub mod perturb;
pub mod pipeline;
pub mod report;
pub mod seed;
pub mod summary;
pub mod synthetic;
pub mod template;

use serde::{Deserialize, Serialize};
use std::fmt;

/// Binary gender used for assignments and classification verdicts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Gender {
    Male,
    Female,
}

impl Gender {
    pub fn inverse(self) -> Gender {
        match self {
            Gender::Male => Gender::Female,
            Gender::Female => Gender::Male,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Gender::Male => "male",
            Gender::Female => "female",
        }
    }

    pub fn parse(s: &str) -> Option<Gender> {
        match s.to_ascii_lowercase().as_str() {
            "male" | "m" => Some(Gender::Male),
            "female" | "f" => Some(Gender::Female),
            _ => None,
        }
    }
}

impl fmt::Display for Gender {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Lowercases a token and strips surrounding ASCII punctuation.
pub fn normalize_token(token: &str) -> String {
    token
        .trim_matches(|c: char| c.is_ascii_punctuation())
        .to_lowercase()
}
