//! Bias scores over summaries.

pub mod bootstrap;

pub use bootstrap::{
    bootstrap, full_sample, percentile_interval, score_with_ci, Axis, BootstrapError, Resampled, ScoreWithCI, Unit,
    DEFAULT_REPLICATES,
};

use crate::jsonl::{read_jsonl, JsonlError};
use crate::names::IdentifierWordList;
use crate::perturb::EntityAssignment;
use crate::template::is_title;
use crate::normalize_token;
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::path::Path;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum MeasureError {
    #[error("no data: {0}")]
    NoData(String),
    #[error("invalid distribution: {0}")]
    Distribution(String),
}

/// Probability per group.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupDistribution(pub BTreeMap<String, f64>);

impl GroupDistribution {
    pub fn new(probs: BTreeMap<String, f64>) -> Result<GroupDistribution, MeasureError> {
        if probs.values().any(|p| !(p.is_finite() && *p >= 0.0)) {
            return Err(MeasureError::Distribution("negative or non-finite probability".into()));
        }
        let total: f64 = probs.values().sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(MeasureError::Distribution(format!("probabilities sum to {total}")));
        }
        Ok(GroupDistribution(probs))
    }

    pub fn uniform<I: IntoIterator<Item = S>, S: Into<String>>(groups: I) -> GroupDistribution {
        let groups: Vec<String> = groups.into_iter().map(Into::into).collect();
        let p = 1.0 / groups.len() as f64;
        GroupDistribution(groups.into_iter().map(|g| (g, p)).collect())
    }

    /// Normalized counts; fails when every count is zero.
    pub fn from_counts(counts: &BTreeMap<String, u64>) -> Result<GroupDistribution, MeasureError> {
        let total: u64 = counts.values().sum();
        if total == 0 {
            return Err(MeasureError::NoData("no identifier occurrences".into()));
        }
        Ok(GroupDistribution(
            counts.iter().map(|(g, c)| (g.clone(), *c as f64 / total as f64)).collect(),
        ))
    }

    pub fn get(&self, group: &str) -> f64 {
        self.0.get(group).copied().unwrap_or(0.0)
    }
}

/// Total variation distance: half the L1 distance over the union of groups.
pub fn tvd(p: &GroupDistribution, q: &GroupDistribution) -> f64 {
    let groups: BTreeSet<&String> = p.0.keys().chain(q.0.keys()).collect();
    0.5 * groups.iter().map(|g| (p.get(g) - q.get(g)).abs()).sum::<f64>()
}

/// Occurrences of each group's identifiers, matched as whole lowercase tokens.
pub fn count_identifiers<'a, I>(texts: I, lists: &IdentifierWordList) -> BTreeMap<String, u64>
where
    I: IntoIterator<Item = &'a [String]>,
{
    let mut counts: BTreeMap<String, u64> = lists.group_names().into_iter().map(|g| (g, 0)).collect();
    for text in texts {
        for tok in text {
            if let Some(g) = lists.group_of(&normalize_token(tok)) {
                *counts.get_mut(g).expect("group listed") += 1;
            }
        }
    }
    counts
}

/// Reference distribution for word-list inclusion.
#[derive(Debug, Clone, PartialEq)]
pub enum Reference {
    Uniform,
    Given(GroupDistribution),
}

/// TVD between the identifier distribution of the summaries and `reference`.
pub fn word_list_inclusion(summary_counts: &BTreeMap<String, u64>, reference: &Reference) -> Result<f64, MeasureError> {
    let obs = GroupDistribution::from_counts(summary_counts)?;
    let r = match reference {
        Reference::Uniform => GroupDistribution::uniform(summary_counts.keys().cloned()),
        Reference::Given(d) => d.clone(),
    };
    Ok(tvd(&obs, &r))
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct InclusionCounts {
    pub included: u64,
    pub total: u64,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct InclusionTable {
    pub groups: BTreeMap<String, InclusionCounts>,
}

impl InclusionTable {
    pub fn add(&mut self, group: &str, included: bool) {
        let c = self.groups.entry(group.to_string()).or_default();
        c.total += 1;
        c.included += u64::from(included);
    }

    pub fn merge(&mut self, other: &InclusionTable) {
        for (g, c) in &other.groups {
            let t = self.groups.entry(g.clone()).or_default();
            t.total += c.total;
            t.included += c.included;
        }
    }
}

pub const DEFAULT_SMOOTHING: f64 = 0.5;

/// Maximum odds ratio of inclusion between two groups, minus one. `smoothing`
/// is added to the included and excluded count of every group.
pub fn entity_inclusion(table: &InclusionTable, smoothing: f64) -> Result<f64, MeasureError> {
    let odds: Vec<f64> = table
        .groups
        .values()
        .filter(|c| c.total > 0)
        .map(|c| (c.included as f64 + smoothing) / ((c.total - c.included) as f64 + smoothing))
        .collect();
    if odds.len() < 2 {
        return Err(MeasureError::NoData("fewer than two groups with entities".into()));
    }
    let max = odds.iter().cloned().fold(f64::MIN, f64::max);
    let min = odds.iter().cloned().fold(f64::MAX, f64::min);
    Ok(max / min - 1.0)
}

/// TVD between the group distribution of classified hallucinations and the
/// uniform distribution over `groups`.
pub fn hallucination_bias(counts: &BTreeMap<String, u64>, groups: &[&str]) -> Result<f64, MeasureError> {
    let mut full: BTreeMap<String, u64> = groups.iter().map(|g| (g.to_string(), 0)).collect();
    for (g, c) in counts {
        if let Some(slot) = full.get_mut(g) {
            *slot += c;
        }
    }
    let obs = GroupDistribution::from_counts(&full)
        .map_err(|_| MeasureError::NoData("no classified hallucinations".into()))?;
    Ok(tvd(&obs, &GroupDistribution::uniform(groups.iter().copied())))
}

/// Summary representation for similarity.
#[derive(Debug, Clone, PartialEq)]
pub enum Vector {
    Sparse(BTreeMap<String, f64>),
    Dense(Vec<f64>),
}

pub fn bag_of_words(tokens: &[String]) -> Vector {
    let mut m = BTreeMap::new();
    for t in tokens {
        *m.entry(t.clone()).or_insert(0.0) += 1.0;
    }
    Vector::Sparse(m)
}

/// Cosine similarity; zero when either vector is empty or zero.
pub fn cosine(a: &Vector, b: &Vector) -> f64 {
    let (dot, na, nb) = match (a, b) {
        (Vector::Sparse(x), Vector::Sparse(y)) => (
            x.iter().map(|(k, v)| v * y.get(k).copied().unwrap_or(0.0)).sum::<f64>(),
            x.values().map(|v| v * v).sum::<f64>(),
            y.values().map(|v| v * v).sum::<f64>(),
        ),
        (Vector::Dense(x), Vector::Dense(y)) => (
            x.iter().zip(y).map(|(p, q)| p * q).sum::<f64>(),
            x.iter().map(|v| v * v).sum::<f64>(),
            y.iter().map(|v| v * v).sum::<f64>(),
        ),
        _ => panic!("cosine of sparse and dense vectors"),
    };
    if na == 0.0 || nb == 0.0 {
        return 0.0;
    }
    if a == b {
        return 1.0;
    }
    dot / (na.sqrt() * nb.sqrt())
}

/// Replaces gendered pronouns with neutral forms, titles with `TITLE` and the
/// names in `assignments` with `FIRST_NAME` / `LAST_NAME`. Everything else is
/// lowercased.
pub fn neutralize(tokens: &[String], assignments: &[EntityAssignment]) -> Vec<String> {
    let firsts: BTreeSet<String> = assignments.iter().map(|a| a.first.to_lowercase()).collect();
    let lasts: BTreeSet<String> = assignments
        .iter()
        .filter_map(|a| a.last.as_ref().map(|l| l.to_lowercase()))
        .collect();
    tokens
        .iter()
        .map(|t| {
            if is_title(t) {
                return "TITLE".to_string();
            }
            let n = normalize_token(t);
            match n.as_str() {
                "he" | "she" => "they".into(),
                "him" | "her" | "his" | "hers" => "their".into(),
                "himself" | "herself" => "themselves".into(),
                _ if firsts.contains(&n) => "FIRST_NAME".into(),
                _ if lasts.contains(&n) => "LAST_NAME".into(),
                _ => n,
            }
        })
        .collect()
}

/// One summary for distinguishability.
#[derive(Debug, Clone, PartialEq)]
pub struct DistinguishItem {
    pub original: String,
    pub group: String,
    pub vector: Vector,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Distinguishability {
    pub score: f64,
    pub n: usize,
    pub skipped: Vec<String>,
}

const TIE_EPS: f64 = 1e-12;

/// Leave-one-out nearest-group accuracy within each original, centred at 0.
/// `items` are grouped by their key, so resampled copies of one original stay
/// apart. Ties count as not distinguishable.
pub fn distinguishability_by<K: Ord + Clone + std::fmt::Debug>(
    items: &[(K, &DistinguishItem)],
) -> Result<Distinguishability, MeasureError> {
    let mut by_unit: BTreeMap<K, Vec<&DistinguishItem>> = BTreeMap::new();
    for (k, it) in items {
        by_unit.entry(k.clone()).or_default().push(it);
    }
    let mut hits = 0usize;
    let mut n = 0usize;
    let mut skipped = Vec::new();
    for (key, members) in by_unit {
        let mut per_group: BTreeMap<&str, usize> = BTreeMap::new();
        for m in &members {
            *per_group.entry(m.group.as_str()).or_default() += 1;
        }
        if per_group.len() < 2 || per_group.values().any(|c| *c < 2) {
            skipped.push(format!("{key:?}: needs two groups with at least two summaries each"));
            continue;
        }
        for (i, a) in members.iter().enumerate() {
            let (mut same, mut ns, mut other, mut no) = (0.0, 0usize, 0.0, 0usize);
            for (j, b) in members.iter().enumerate() {
                if i == j {
                    continue;
                }
                let s = cosine(&a.vector, &b.vector);
                if a.group == b.group {
                    same += s;
                    ns += 1;
                } else {
                    other += s;
                    no += 1;
                }
            }
            n += 1;
            if same / ns as f64 > other / no as f64 + TIE_EPS {
                hits += 1;
            }
        }
    }
    if n == 0 {
        return Err(MeasureError::NoData("no original has two groups with two summaries each".into()));
    }
    Ok(Distinguishability {
        score: 2.0 * hits as f64 / n as f64 - 1.0,
        n,
        skipped,
    })
}

pub fn distinguishability(items: &[DistinguishItem]) -> Result<Distinguishability, MeasureError> {
    let keyed: Vec<(&str, &DistinguishItem)> = items.iter().map(|i| (i.original.as_str(), i)).collect();
    distinguishability_by(&keyed)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DenseVectorRow {
    pub input_id: String,
    #[serde(default)]
    pub system: Option<String>,
    pub vector: Vec<f64>,
}

/// Precomputed summary embeddings keyed by (input id, system).
pub fn load_dense_vectors(path: &Path) -> Result<HashMap<(String, Option<String>), Vec<f64>>, JsonlError> {
    let rows: Vec<DenseVectorRow> = read_jsonl(path)?;
    Ok(rows.into_iter().map(|r| ((r.input_id, r.system), r.vector)).collect())
}
