//! Entity templates.
//!
//! A template freezes an annotated document and marks every token range that
//! has to change when a person is re-assigned: name tokens, gendered pronouns,
//! titles and (optionally) manually annotated content words. Filling every
//! hole with its original tokens gives back the source document.

use crate::ingest::{AnnotatedDocument, MentionSpan, NamedEntitySpan, Span};
use crate::Gender;
use serde::{Deserialize, Serialize};
use std::cmp::Ordering;
use std::collections::{BTreeMap, HashMap, HashSet};

pub type EntityId = String;

/// Titles recognised in mentions, with and without the trailing period.
pub const TITLES: [&str; 5] = ["Mr.", "Mrs.", "Ms.", "Sir", "Lady"];

/// Canonical title form for a token, if it is one.
pub fn title_of(token: &str) -> Option<&'static str> {
    match token {
        "Mr." | "Mr" | "MR." => Some("Mr."),
        "Mrs." | "Mrs" | "MRS." => Some("Mrs."),
        "Ms." | "Ms" | "MS." => Some("Ms."),
        "Sir" | "SIR" => Some("Sir"),
        "Lady" | "LADY" => Some("Lady"),
        _ => None,
    }
}

pub fn is_title(token: &str) -> bool {
    title_of(token).is_some()
}

pub fn title_gender(title: &str) -> Option<Gender> {
    match title_of(title)? {
        "Mr." | "Sir" => Some(Gender::Male),
        _ => Some(Gender::Female),
    }
}

/// Gender carried by a personal pronoun form, if any.
pub fn pronoun_gender(token: &str) -> Option<Gender> {
    match token.to_lowercase().as_str() {
        "he" | "him" | "his" | "himself" => Some(Gender::Male),
        "she" | "her" | "hers" | "herself" => Some(Gender::Female),
        _ => None,
    }
}

pub fn is_pronoun_pos(pos: &str) -> bool {
    pos == "PRP" || pos == "PRP$"
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum SlotCategory {
    FullName,
    FirstName,
    LastName,
    Pronoun,
    Title,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EntitySlot {
    pub entity: EntityId,
    pub span: Span,
    pub category: SlotCategory,
    /// Original tokens covered by the slot.
    pub original: Vec<String>,
    /// POS tag of a pronoun slot.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pos: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub title_text: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EntityMention {
    pub span: Span,
    pub pronoun: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EntityTemplate {
    pub id: EntityId,
    pub inferred_first: Option<String>,
    pub inferred_last: Option<String>,
    pub slots: Vec<EntitySlot>,
    pub mentions: Vec<EntityMention>,
    pub is_gendered: bool,
    /// Majority gender of the original pronoun and title evidence, or of the
    /// attached content words when there is none.
    pub original_gender: Option<Gender>,
    /// Most frequent original female title (`Mrs.` or `Ms.`).
    pub female_title: Option<String>,
}

impl EntityTemplate {
    pub fn has_name_slot(&self) -> bool {
        self.slots.iter().any(|s| {
            matches!(
                s.category,
                SlotCategory::FullName | SlotCategory::FirstName | SlotCategory::LastName
            )
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ContentWordSpan {
    pub span: Span,
    pub entities: Vec<EntityId>,
    pub male_variant: String,
    pub female_variant: String,
    #[serde(default)]
    pub neutral_variant: Option<String>,
    pub original: Vec<String>,
}

/// One line of the content-word side file.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ContentWordAnnotation {
    pub document: String,
    pub start: usize,
    pub end: usize,
    pub entities: Vec<EntityId>,
    pub male: String,
    pub female: String,
    #[serde(default)]
    pub neutral: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DocumentTemplate {
    pub id: String,
    pub tokens: Vec<String>,
    pub sentences: Vec<usize>,
    pub entities: Vec<EntityTemplate>,
    #[serde(default)]
    pub content_spans: Vec<ContentWordSpan>,
    pub eligible: bool,
    #[serde(default)]
    pub diagnostics: Vec<String>,
}

/// A position in the frozen token stream.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Piece<'a> {
    Text(&'a str),
    Slot(&'a EntitySlot),
    Content(&'a ContentWordSpan),
}

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum TemplateError {
    #[error("document {doc}: content span {start}-{end} is out of range")]
    ContentOutOfRange { doc: String, start: usize, end: usize },
    #[error("document {doc}: content span {start}-{end} overlaps another hole")]
    ContentOverlap { doc: String, start: usize, end: usize },
    #[error("document {doc}: content span {start}-{end} references unknown entity {entity}")]
    ContentUnknownEntity {
        doc: String,
        start: usize,
        end: usize,
        entity: String,
    },
    #[error("document {doc}: content span {start}-{end} governs several entities but has no neutral variant")]
    ContentMissingNeutral { doc: String, start: usize, end: usize },
}

impl DocumentTemplate {
    pub fn entity(&self, id: &str) -> Option<&EntityTemplate> {
        self.entities.iter().find(|e| e.id == id)
    }

    pub fn slots(&self) -> impl Iterator<Item = &EntitySlot> {
        self.entities.iter().flat_map(|e| e.slots.iter())
    }

    /// The token stream with holes, in document order.
    pub fn frozen(&self) -> Vec<Piece<'_>> {
        let mut starts: BTreeMap<usize, Piece<'_>> = BTreeMap::new();
        let mut ends: HashMap<usize, usize> = HashMap::new();
        for s in self.slots() {
            starts.insert(s.span.start, Piece::Slot(s));
            ends.insert(s.span.start, s.span.end);
        }
        for c in &self.content_spans {
            starts.insert(c.span.start, Piece::Content(c));
            ends.insert(c.span.start, c.span.end);
        }
        let mut out = Vec::with_capacity(self.tokens.len());
        let mut i = 0;
        while i < self.tokens.len() {
            if let Some(piece) = starts.get(&i) {
                out.push(*piece);
                i = ends[&i] + 1;
            } else {
                out.push(Piece::Text(&self.tokens[i]));
                i += 1;
            }
        }
        out
    }

    /// Fills each hole with the tokens it replaced.
    pub fn fill_original(&self) -> Vec<String> {
        let mut out = Vec::with_capacity(self.tokens.len());
        for piece in self.frozen() {
            match piece {
                Piece::Text(t) => out.push(t.to_string()),
                Piece::Slot(s) => out.extend(s.original.iter().cloned()),
                Piece::Content(c) => out.extend(c.original.iter().cloned()),
            }
        }
        out
    }

    /// Checks that holes are disjoint and in range.
    pub fn holes_are_disjoint(&self) -> bool {
        let mut taken = vec![false; self.tokens.len()];
        let spans = self
            .slots()
            .map(|s| s.span)
            .chain(self.content_spans.iter().map(|c| c.span));
        for span in spans {
            if span.end >= taken.len() || span.start > span.end {
                return false;
            }
            for t in &mut taken[span.start..=span.end] {
                if *t {
                    return false;
                }
                *t = true;
            }
        }
        true
    }

    /// Attaches manually annotated content-word spans.
    pub fn attach_content_words(&mut self, annotations: &[ContentWordAnnotation]) -> Result<(), TemplateError> {
        let mut taken = vec![false; self.tokens.len()];
        for s in self.slots() {
            for t in &mut taken[s.span.start..=s.span.end] {
                *t = true;
            }
        }
        for a in annotations.iter().filter(|a| a.document == self.id) {
            let doc = self.id.clone();
            if a.start > a.end || a.end >= self.tokens.len() {
                return Err(TemplateError::ContentOutOfRange { doc, start: a.start, end: a.end });
            }
            if taken[a.start..=a.end].iter().any(|t| *t) {
                return Err(TemplateError::ContentOverlap { doc, start: a.start, end: a.end });
            }
            if let Some(e) = a.entities.iter().find(|e| self.entity(e).is_none()) {
                return Err(TemplateError::ContentUnknownEntity {
                    doc,
                    start: a.start,
                    end: a.end,
                    entity: e.clone(),
                });
            }
            if a.entities.len() > 1 && a.neutral.is_none() {
                return Err(TemplateError::ContentMissingNeutral { doc, start: a.start, end: a.end });
            }
            for t in &mut taken[a.start..=a.end] {
                *t = true;
            }
            self.content_spans.push(ContentWordSpan {
                span: Span::new(a.start, a.end),
                entities: a.entities.clone(),
                male_variant: a.male.clone(),
                female_variant: a.female.clone(),
                neutral_variant: a.neutral.clone(),
                original: self.tokens[a.start..=a.end].to_vec(),
            });
        }
        self.content_spans.sort_by_key(|c| c.span.start);
        for entity in self.entities.iter_mut().filter(|e| e.original_gender.is_none()) {
            let (mut male, mut female) = (0, 0);
            for c in self.content_spans.iter().filter(|c| c.entities.contains(&entity.id)) {
                let text = c.original.join(" ");
                if text.eq_ignore_ascii_case(&c.male_variant) {
                    male += 1;
                } else if text.eq_ignore_ascii_case(&c.female_variant) {
                    female += 1;
                }
            }
            entity.original_gender = match male.cmp(&female) {
                Ordering::Greater => Some(Gender::Male),
                Ordering::Less => Some(Gender::Female),
                Ordering::Equal => None,
            };
        }
        Ok(())
    }
}

/// A person entity before slot categorisation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PersonEntity {
    pub id: EntityId,
    pub mentions: Vec<MentionSpan>,
    /// PERSON spans linked to this entity.
    pub names: Vec<Span>,
}

fn singleton_id(ne: &NamedEntitySpan) -> EntityId {
    format!("singleton-{}-{}", ne.start, ne.end)
}

/// Links every PERSON span to the deepest chain mention containing it, or to a
/// fresh singleton when no mention contains it.
pub fn person_entities(doc: &AnnotatedDocument) -> Vec<PersonEntity> {
    let mut by_id: BTreeMap<EntityId, PersonEntity> = BTreeMap::new();
    for ne in doc.entities.iter().filter(|e| e.is_person()) {
        let span = ne.span();
        let deepest = doc
            .mentions
            .iter()
            .filter(|m| m.chain.is_some() && m.span().contains(&span))
            .min_by(|a, b| {
                a.span()
                    .len()
                    .cmp(&b.span().len())
                    .then(a.start.cmp(&b.start))
                    .then(a.chain.cmp(&b.chain))
            });
        match deepest {
            Some(m) => {
                let chain = m.chain.clone().expect("filtered on chain");
                let entry = by_id.entry(chain.clone()).or_insert_with(|| PersonEntity {
                    id: chain.clone(),
                    mentions: doc.chains[&chain]
                        .iter()
                        .map(|&i| doc.mentions[i].clone())
                        .collect(),
                    names: Vec::new(),
                });
                entry.names.push(span);
            }
            None => {
                let id = singleton_id(ne);
                by_id.insert(
                    id.clone(),
                    PersonEntity {
                        id,
                        mentions: vec![MentionSpan {
                            start: ne.start,
                            end: ne.end,
                            chain: None,
                        }],
                        names: vec![span],
                    },
                );
            }
        }
    }
    let mut out: Vec<PersonEntity> = by_id.into_values().collect();
    out.sort_by(|a, b| {
        let first = |e: &PersonEntity| e.mentions.iter().map(|m| m.start).min().unwrap_or(usize::MAX);
        first(a).cmp(&first(b)).then(a.id.cmp(&b.id))
    });
    out
}

/// Ids of the selected person chains and synthetic singletons.
pub fn select_person_chains(doc: &AnnotatedDocument) -> Vec<EntityId> {
    person_entities(doc).into_iter().map(|e| e.id).collect()
}

/// Name tokens of a PERSON span with leading title tokens removed.
fn name_range(doc: &AnnotatedDocument, span: Span) -> Option<Span> {
    let mut start = span.start;
    while start <= span.end && is_title(&doc.tokens[start].text) {
        start += 1;
    }
    (start <= span.end).then(|| Span::new(start, span.end))
}

/// Picks the most frequent candidate; ties go to the earliest position, then
/// to lexicographic order.
fn most_frequent(candidates: &[(String, usize)]) -> Option<String> {
    let mut stats: HashMap<&str, (usize, usize)> = HashMap::new();
    for (text, pos) in candidates {
        let e = stats.entry(text.as_str()).or_insert((0, *pos));
        e.0 += 1;
        e.1 = e.1.min(*pos);
    }
    stats
        .into_iter()
        .min_by(|a, b| {
            b.1 .0
                .cmp(&a.1 .0)
                .then(a.1 .1.cmp(&b.1 .1))
                .then(a.0.cmp(b.0))
        })
        .map(|(t, _)| t.to_string())
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct InferredNames {
    pub first: Option<String>,
    pub last: Option<String>,
    /// Set when the last name rests only on single-token spans without a title.
    pub single_token_guess: bool,
}

/// First and last name of a person entity from its PERSON spans.
pub fn infer_names(doc: &AnnotatedDocument, entity: &PersonEntity) -> InferredNames {
    let mut titled_last = Vec::new();
    let mut last_candidates = Vec::new();
    let mut first_candidates = Vec::new();
    let mut multi_token_seen = false;
    for &span in &entity.names {
        let Some(range) = name_range(doc, span) else { continue };
        let preceded_by_title = range.start > 0
            && matches!(
                title_of(&doc.tokens[range.start - 1].text),
                Some("Mr." | "Mrs." | "Ms.")
            );
        if range.len() == 1 && preceded_by_title {
            titled_last.push((doc.tokens[range.start].text.clone(), range.start));
            continue;
        }
        last_candidates.push((doc.tokens[range.end].text.clone(), range.end));
        for i in range.start..range.end {
            first_candidates.push((doc.tokens[i].text.clone(), i));
        }
        multi_token_seen |= range.len() > 1;
    }
    let last = if titled_last.is_empty() {
        most_frequent(&last_candidates)
    } else {
        most_frequent(&titled_last)
    };
    let first = most_frequent(&first_candidates).filter(|f| Some(f) != last.as_ref());
    InferredNames {
        single_token_guess: titled_last.is_empty() && !multi_token_seen && last.is_some(),
        first,
        last,
    }
}

struct SlotSet {
    taken: Vec<bool>,
}

impl SlotSet {
    fn free(&self, span: Span) -> bool {
        !self.taken[span.start..=span.end].iter().any(|t| *t)
    }

    fn take(&mut self, span: Span) {
        for t in &mut self.taken[span.start..=span.end] {
            *t = true;
        }
    }
}

fn slot(doc: &AnnotatedDocument, entity: &str, span: Span, category: SlotCategory) -> EntitySlot {
    let original: Vec<String> = doc.tokens[span.start..=span.end]
        .iter()
        .map(|t| t.text.clone())
        .collect();
    EntitySlot {
        entity: entity.to_string(),
        span,
        category,
        pos: (category == SlotCategory::Pronoun).then(|| doc.tokens[span.start].pos.clone()),
        title_text: (category == SlotCategory::Title).then(|| original[0].clone()),
        original,
    }
}

/// Name and title slots inside `range`, for tokens matching the inferred names.
fn name_slots(
    doc: &AnnotatedDocument,
    id: &str,
    names: &InferredNames,
    range: Span,
    slots: &mut SlotSet,
    out: &mut Vec<EntitySlot>,
) {
    let find = |name: &Option<String>| -> Option<usize> {
        let name = name.as_deref()?;
        (range.start..=range.end).find(|&i| doc.tokens[i].text == name && slots.free(Span::new(i, i)))
    };
    let first = find(&names.first);
    let last = find(&names.last);
    let mut made = Vec::new();
    match (first, last) {
        (Some(f), Some(l)) if f < l && slots.free(Span::new(f, l)) => {
            made.push(slot(doc, id, Span::new(f, l), SlotCategory::FullName));
        }
        _ => {
            if let Some(f) = first {
                made.push(slot(doc, id, Span::new(f, f), SlotCategory::FirstName));
            }
            if let Some(l) = last {
                made.push(slot(doc, id, Span::new(l, l), SlotCategory::LastName));
            }
        }
    }
    let Some(lead) = made.iter().map(|s| s.span.start).min() else { return };
    for s in made {
        slots.take(s.span);
        out.push(s);
    }
    if lead > 0 && is_title(&doc.tokens[lead - 1].text) && slots.free(Span::new(lead - 1, lead - 1)) {
        let t = Span::new(lead - 1, lead - 1);
        slots.take(t);
        out.push(slot(doc, id, t, SlotCategory::Title));
    }
}

/// Builds the template of one document. Content-word spans are attached
/// separately with [`DocumentTemplate::attach_content_words`].
pub fn build_template(doc: &AnnotatedDocument) -> DocumentTemplate {
    let people = person_entities(doc);
    let mut slots = SlotSet {
        taken: vec![false; doc.tokens.len()],
    };
    let mut diagnostics = Vec::new();
    let inferred: Vec<InferredNames> = people.iter().map(|p| infer_names(doc, p)).collect();
    let mut per_entity: Vec<Vec<EntitySlot>> = vec![Vec::new(); people.len()];

    // names inside linked PERSON spans first, so nested references stay with
    // the entity the span belongs to
    for (k, p) in people.iter().enumerate() {
        if inferred[k].single_token_guess {
            diagnostics.push(format!(
                "entity {}: single-token name {:?} treated as last name",
                p.id,
                inferred[k].last.as_deref().unwrap_or_default()
            ));
        }
        for &span in &p.names {
            name_slots(doc, &p.id, &inferred[k], span, &mut slots, &mut per_entity[k]);
        }
    }

    let linked: Vec<(usize, Span)> = people
        .iter()
        .enumerate()
        .flat_map(|(k, p)| p.names.iter().map(move |s| (k, *s)))
        .collect();

    // unlabelled name mentions and pronouns of the entity's own chain
    for (k, p) in people.iter().enumerate() {
        for m in &p.mentions {
            let span = m.span();
            if span.len() == 1 {
                let tok = &doc.tokens[span.start];
                if is_pronoun_pos(&tok.pos) {
                    if pronoun_gender(&tok.text).is_some() && slots.free(span) {
                        slots.take(span);
                        per_entity[k].push(slot(doc, &p.id, span, SlotCategory::Pronoun));
                    }
                    continue;
                }
            }
            let foreign = linked
                .iter()
                .any(|(other, s)| *other != k && span.overlaps(s));
            if !foreign {
                name_slots(doc, &p.id, &inferred[k], span, &mut slots, &mut per_entity[k]);
            }
        }
    }

    let entities: Vec<EntityTemplate> = people
        .iter()
        .zip(inferred)
        .zip(per_entity)
        .map(|((p, names), mut slots)| {
            slots.sort_by_key(|s| s.span.start);
            entity_template(doc, p, names, slots)
        })
        .collect();

    DocumentTemplate {
        id: doc.key(),
        tokens: doc.texts(),
        sentences: doc.tokens.iter().map(|t| t.sentence).collect(),
        eligible: entities.iter().any(|e| e.is_gendered),
        entities,
        content_spans: Vec::new(),
        diagnostics,
    }
}

fn entity_template(
    doc: &AnnotatedDocument,
    p: &PersonEntity,
    names: InferredNames,
    slots: Vec<EntitySlot>,
) -> EntityTemplate {
    let mut male = 0usize;
    let mut female = 0usize;
    let mut female_titles: Vec<(String, usize)> = Vec::new();
    for s in &slots {
        let g = match s.category {
            SlotCategory::Pronoun => pronoun_gender(&s.original[0]),
            SlotCategory::Title => {
                let canon = title_of(&s.original[0]);
                if matches!(canon, Some("Mrs." | "Ms.")) {
                    female_titles.push((s.original[0].clone(), s.span.start));
                }
                title_gender(&s.original[0])
            }
            _ => None,
        };
        match g {
            Some(Gender::Male) => male += 1,
            Some(Gender::Female) => female += 1,
            None => {}
        }
    }
    let is_gendered = slots.iter().any(|s| {
        matches!(
            s.category,
            SlotCategory::FirstName | SlotCategory::FullName | SlotCategory::Pronoun | SlotCategory::Title
        )
    });
    let mut seen = HashSet::new();
    let mentions = p
        .mentions
        .iter()
        .filter(|m| seen.insert(m.span()))
        .map(|m| EntityMention {
            span: m.span(),
            pronoun: m.start == m.end && is_pronoun_pos(&doc.tokens[m.start].pos),
        })
        .collect();
    EntityTemplate {
        id: p.id.clone(),
        inferred_first: names.first,
        inferred_last: names.last,
        slots,
        mentions,
        is_gendered,
        original_gender: match male.cmp(&female) {
            Ordering::Greater => Some(Gender::Male),
            Ordering::Less => Some(Gender::Female),
            Ordering::Equal => None,
        },
        female_title: most_frequent(&female_titles),
    }
}
