//! Matching summary entities to input entities.
//!
//! A summary entity aligns to an input entity when it contains the entity's
//! last name and every other token is either the first name assigned to that
//! entity or a title. Entities that match nothing are hallucinations only if
//! at least one of their tokens is absent from the input text; otherwise they
//! stay unresolved and count toward neither measure.

use crate::perturb::{GeneratedInput, InputEntity};
use crate::summary::{SummaryEntity, SummaryRecord};
use crate::template::{is_title, title_gender};
use crate::{normalize_token, Gender};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};

/// The token most often in final position across `mentions`; ties go to the
/// token whose first final occurrence comes earliest. A trailing possessive
/// marker is skipped.
pub fn chain_last_name(mentions: &[Vec<String>]) -> Option<String> {
    let mut counts: Vec<(String, usize)> = Vec::new();
    for m in mentions {
        let Some(last) = m.iter().rev().find(|t| !matches!(t.as_str(), "'s" | "'" | "\u{2019}s")) else {
            continue;
        };
        match counts.iter_mut().find(|(t, _)| t == last) {
            Some((_, c)) => *c += 1,
            None => counts.push((last.clone(), 1)),
        }
    }
    let best = counts.iter().map(|(_, c)| *c).max()?;
    counts.into_iter().find(|(_, c)| *c == best).map(|(t, _)| t)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AlignmentStatus {
    Aligned,
    Hallucinated,
    Unresolved,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AlignmentResult {
    pub entity: SummaryEntity,
    pub status: AlignmentStatus,
    pub matched_entity: Option<String>,
    pub reason: String,
}

fn eq(a: &str, b: &str) -> bool {
    normalize_token(a) == normalize_token(b)
}

/// Why `entity` fails to match `candidate`, or `None` when it matches.
fn mismatch(tokens: &[String], candidate: &InputEntity) -> Option<String> {
    let last = candidate.last.as_deref().or(candidate.first.as_deref())?;
    let Some(pos) = tokens.iter().rposition(|t| eq(t, last)) else {
        return Some(format!("no token equals last name `{last}`"));
    };
    for (i, t) in tokens.iter().enumerate() {
        if i == pos || is_title(t) {
            continue;
        }
        if candidate.first.as_deref().is_some_and(|f| eq(t, f)) {
            continue;
        }
        return Some(format!("`{t}` is neither the assigned first name nor a title"));
    }
    None
}

/// Aligns one summary entity against the entities of `input`.
pub fn align(entity: &SummaryEntity, input: &GeneratedInput) -> AlignmentResult {
    let tokens = &entity.tokens;
    let mut best: Option<(bool, usize)> = None;
    let mut closest: Option<String> = None;
    for (i, cand) in input.entities.iter().enumerate() {
        match mismatch(tokens, cand) {
            None => {
                let first_hit = cand
                    .first
                    .as_deref()
                    .is_some_and(|f| tokens.iter().any(|t| eq(t, f)) && cand.last.is_some());
                if best.is_none_or(|(h, _)| first_hit && !h) {
                    best = Some((first_hit, i));
                }
            }
            Some(why) if !why.starts_with("no token") && closest.is_none() => {
                closest = Some(format!("entity {}: {why}", cand.id));
            }
            Some(_) => {}
        }
    }
    if let Some((_, i)) = best {
        let cand = &input.entities[i];
        let mut reason = format!(
            "contains last name `{}`",
            cand.last.as_deref().or(cand.first.as_deref()).unwrap_or_default()
        );
        let title_genders: BTreeSet<Gender> = tokens.iter().filter_map(|t| title_gender(t)).collect();
        if let Some(g) = cand.gender {
            if title_genders.iter().any(|t| *t != g) {
                reason.push_str(&format!("; title gender differs from assigned {g}"));
            }
        }
        return AlignmentResult {
            entity: entity.clone(),
            status: AlignmentStatus::Aligned,
            matched_entity: Some(cand.id.clone()),
            reason,
        };
    }
    let source: HashSet<String> = input.tokens.iter().map(|t| normalize_token(t)).collect();
    let novel: Vec<&String> = tokens
        .iter()
        .filter(|t| !is_title(t) && !source.contains(&normalize_token(t)))
        .collect();
    let (status, reason) = if novel.is_empty() {
        (
            AlignmentStatus::Unresolved,
            closest.unwrap_or_else(|| "no matching entity; all tokens appear in the input".into()),
        )
    } else {
        (
            AlignmentStatus::Hallucinated,
            format!(
                "no matching entity; `{}` does not appear in the input",
                novel.iter().map(|s| s.as_str()).collect::<Vec<_>>().join(" ")
            ),
        )
    };
    AlignmentResult {
        entity: entity.clone(),
        status,
        matched_entity: None,
        reason,
    }
}

/// One line of the alignment output.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AlignmentRow {
    pub input_id: String,
    pub system: String,
    pub entity_tokens: Vec<String>,
    pub status: AlignmentStatus,
    pub matched_entity: Option<String>,
    pub reason: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct AlignmentCounts {
    pub summaries: usize,
    pub input_entities: usize,
    pub summary_entities: usize,
    /// Input entities matched by at least one summary entity.
    pub input_entities_aligned: usize,
    pub aligned: usize,
    pub hallucinated: usize,
    pub unresolved: usize,
    /// Filled in once hallucinations have been classified.
    pub hallucinated_with_gender: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct CorpusAlignment {
    pub rows: Vec<AlignmentRow>,
    pub counts: BTreeMap<String, AlignmentCounts>,
}

impl CorpusAlignment {
    /// Ids of aligned input entities per (system, input).
    pub fn included(&self) -> BTreeMap<(String, String), BTreeSet<String>> {
        let mut out: BTreeMap<(String, String), BTreeSet<String>> = BTreeMap::new();
        for r in &self.rows {
            let set = out.entry((r.system.clone(), r.input_id.clone())).or_default();
            if let (AlignmentStatus::Aligned, Some(e)) = (r.status, &r.matched_entity) {
                set.insert(e.clone());
            }
        }
        out
    }
}

/// Aligns every summary against its input and tallies per-system counts.
pub fn align_corpus(records: &[SummaryRecord], inputs: &[GeneratedInput]) -> CorpusAlignment {
    let by_id: HashMap<&str, &GeneratedInput> = inputs.iter().map(|i| (i.id.as_str(), i)).collect();
    let per_record: Vec<(Vec<AlignmentRow>, AlignmentCounts, &str)> = records
        .par_iter()
        .filter_map(|rec| {
            let input = by_id.get(rec.input_id.as_str())?;
            let results: Vec<AlignmentResult> = rec.entities.iter().map(|e| align(e, input)).collect();
            let mut c = AlignmentCounts {
                summaries: 1,
                input_entities: input.entities.len(),
                summary_entities: results.len(),
                ..Default::default()
            };
            let mut matched = BTreeSet::new();
            for r in &results {
                match r.status {
                    AlignmentStatus::Aligned => c.aligned += 1,
                    AlignmentStatus::Hallucinated => c.hallucinated += 1,
                    AlignmentStatus::Unresolved => c.unresolved += 1,
                }
                matched.extend(r.matched_entity.clone());
            }
            c.input_entities_aligned = matched.len();
            let rows = results
                .into_iter()
                .map(|r| AlignmentRow {
                    input_id: rec.input_id.clone(),
                    system: rec.system.clone(),
                    entity_tokens: r.entity.tokens,
                    status: r.status,
                    matched_entity: r.matched_entity,
                    reason: r.reason,
                })
                .collect();
            Some((rows, c, rec.system.as_str()))
        })
        .collect();
    let mut out = CorpusAlignment::default();
    for (rows, c, system) in per_record {
        out.rows.extend(rows);
        let t = out.counts.entry(system.to_string()).or_default();
        t.summaries += c.summaries;
        t.input_entities += c.input_entities;
        t.summary_entities += c.summary_entities;
        t.input_entities_aligned += c.input_entities_aligned;
        t.aligned += c.aligned;
        t.hallucinated += c.hallucinated;
        t.unresolved += c.unresolved;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::perturb::SchemeKind;
    use crate::summary::{detect_entities, tokenize_summary, Lexicon};

    fn v(s: &str) -> Vec<String> {
        s.split_whitespace().map(str::to_string).collect()
    }

    fn input(text: &str, entities: Vec<InputEntity>) -> GeneratedInput {
        let tokens = v(text);
        GeneratedInput {
            id: "i".into(),
            original_id: "o".into(),
            variant: 0,
            pair_id: None,
            scheme: SchemeKind::GenderLocal,
            seed: 0,
            assignments: vec![],
            entities,
            text: text.into(),
            sentences: vec![0; tokens.len()],
            tokens,
        }
    }

    fn ent(id: &str, first: &str, last: &str, g: Gender) -> InputEntity {
        InputEntity {
            id: id.into(),
            group: Some(g.as_str().into()),
            gender: Some(g),
            first: Some(first.into()),
            last: Some(last.into()),
        }
    }

    fn se(s: &str) -> SummaryEntity {
        let tokens = v(s);
        SummaryEntity {
            start: 0,
            end: tokens.len() - 1,
            tokens,
        }
    }

    #[test]
    fn last_name_by_frequency() {
        let m = vec![v("Melissa Levin"), v("Levin"), v("Ms. Levin")];
        assert_eq!(chain_last_name(&m).as_deref(), Some("Levin"));
        assert_eq!(chain_last_name(&[v("Obama")]).as_deref(), Some("Obama"));
        assert_eq!(chain_last_name(&[v("Anne Smith"), v("the Jones")]).as_deref(), Some("Smith"));
        assert_eq!(chain_last_name(&[v("Levin 's")]).as_deref(), Some("Levin"));
        assert_eq!(chain_last_name(&[]), None);
    }

    #[test]
    fn alignment_examples() {
        let inp = input(
            "Melissa Levin said she would go",
            vec![ent("1", "Melissa", "Levin", Gender::Female)],
        );
        let r = align(&se("Melissa Levin"), &inp);
        assert_eq!(r.status, AlignmentStatus::Aligned);
        assert_eq!(r.matched_entity.as_deref(), Some("1"));
        assert_eq!(align(&se("Levin"), &inp).status, AlignmentStatus::Aligned);
        assert_eq!(align(&se("Ms. Levin"), &inp).status, AlignmentStatus::Aligned);
        assert!(align(&se("Mr. Levin"), &inp).reason.contains("title gender"));
        assert_eq!(align(&se("John Levin"), &inp).status, AlignmentStatus::Hallucinated);
        assert_eq!(align(&se("Boris Yeltsin"), &inp).status, AlignmentStatus::Hallucinated);
    }

    #[test]
    fn tokens_in_source_are_never_hallucinated() {
        let inp = input(
            "Melissa Levin met Boris Yeltsin",
            vec![ent("1", "Melissa", "Levin", Gender::Female)],
        );
        let r = align(&se("Boris Yeltsin"), &inp);
        assert_eq!(r.status, AlignmentStatus::Unresolved);
        let r = align(&se("Boris Levin"), &inp);
        assert_eq!(r.status, AlignmentStatus::Unresolved);
    }

    #[test]
    fn first_name_match_breaks_ties() {
        let inp = input(
            "Anna Levin and Paul Levin",
            vec![
                ent("1", "Anna", "Levin", Gender::Female),
                ent("2", "Paul", "Levin", Gender::Male),
            ],
        );
        assert_eq!(align(&se("Paul Levin"), &inp).matched_entity.as_deref(), Some("2"));
        assert_eq!(align(&se("Levin"), &inp).matched_entity.as_deref(), Some("1"));
    }

    #[test]
    fn corpus_counts() {
        let inp = input(
            "Melissa Levin said she would go",
            vec![ent("1", "Melissa", "Levin", Gender::Female), ent("2", "Tom", "Hart", Gender::Male)],
        );
        let lex = Lexicon::new(["melissa", "levin", "boris", "yeltsin"]);
        let mk = |system: &str, text: &str| {
            let tokens = tokenize_summary(text);
            SummaryRecord {
                input_id: "i".into(),
                system: system.into(),
                text: text.into(),
                entities: detect_entities(&tokens, &lex),
                tokens,
            }
        };
        let recs = vec![
            mk("copy", "Melissa Levin said she would go"),
            mk("halluc", "Levin met Boris Yeltsin"),
        ];
        let out = align_corpus(&recs, &[inp.clone()]);
        assert_eq!(out.counts["copy"].aligned, 1);
        assert_eq!(out.counts["copy"].hallucinated, 0);
        assert_eq!(out.counts["halluc"].hallucinated, 1);
        assert_eq!(out.counts["halluc"].input_entities_aligned, 1);
        assert!(align_corpus(&[], &[inp]).counts.is_empty());
    }
}
