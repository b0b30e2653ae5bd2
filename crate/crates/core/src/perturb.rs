//! Input generation from entity templates.
//!
//! Four assignment schemes are supported:
//!
//! * `gender_local`: half of the gendered entities of an input are male and
//!   half female. Variants come in pairs (`2k`, `2k + 1`) that share their name
//!   lists and invert every entity's gender.
//! * `gender_global`: all gendered entities of an input share one gender;
//!   even variants are male, odd variants female.
//! * `race_random_gender`: entities are split evenly between the two race
//!   groups of the name dictionary (pairs invert the split) and get a random
//!   gender that stays fixed within the pair. First and last names change.
//! * `race_intersectional`: like the above, but gender follows race through a
//!   fixed group-to-gender mapping.

use crate::align::chain_last_name;
use crate::names::{display_name, sample_distinct, GenderNameTable, NameError, NamePool, RaceNameTable};
use crate::seed::{derive_rng, derive_seed, Rng};
use crate::template::{title_of, DocumentTemplate, EntityId, EntityTemplate, Piece, SlotCategory};
use crate::Gender;
use rand::seq::SliceRandom;
use rand::Rng as _;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SchemeKind {
    GenderLocal,
    GenderGlobal,
    RaceRandomGender,
    RaceIntersectional,
}

impl SchemeKind {
    pub fn parse(s: &str) -> Option<SchemeKind> {
        match s {
            "gender_local" => Some(SchemeKind::GenderLocal),
            "gender_global" => Some(SchemeKind::GenderGlobal),
            "race_random_gender" => Some(SchemeKind::RaceRandomGender),
            "race_intersectional" => Some(SchemeKind::RaceIntersectional),
            _ => None,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            SchemeKind::GenderLocal => "gender_local",
            SchemeKind::GenderGlobal => "gender_global",
            SchemeKind::RaceRandomGender => "race_random_gender",
            SchemeKind::RaceIntersectional => "race_intersectional",
        }
    }

    pub fn is_race(self) -> bool {
        matches!(self, SchemeKind::RaceRandomGender | SchemeKind::RaceIntersectional)
    }

    /// Schemes whose variants come in inverted pairs.
    pub fn is_paired(self) -> bool {
        self != SchemeKind::GenderGlobal
    }
}

impl fmt::Display for SchemeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Gender of each race group in the intersectional scheme.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Intersection {
    pub black: Gender,
    pub white: Gender,
}

impl Intersection {
    pub fn gender_of(&self, group: &str) -> Option<Gender> {
        match group {
            "black" => Some(self.black),
            "white" => Some(self.white),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AssignmentScheme {
    pub kind: SchemeKind,
    #[serde(default)]
    pub intersection: Option<Intersection>,
    #[serde(default = "default_variants")]
    pub variants_per_original: u32,
    #[serde(default)]
    pub alter_last_names: bool,
    /// Sample census names proportionally to frequency instead of uniformly.
    #[serde(default)]
    pub weighted_names: bool,
}

fn default_variants() -> u32 {
    20
}

impl AssignmentScheme {
    pub fn new(kind: SchemeKind) -> AssignmentScheme {
        AssignmentScheme {
            kind,
            intersection: None,
            variants_per_original: 20,
            alter_last_names: false,
            weighted_names: false,
        }
    }

    pub fn intersectional(black: Gender, white: Gender) -> AssignmentScheme {
        AssignmentScheme {
            intersection: Some(Intersection { black, white }),
            ..AssignmentScheme::new(SchemeKind::RaceIntersectional)
        }
    }

    pub fn validate(&self) -> Result<(), GenerationError> {
        let needs = self.kind == SchemeKind::RaceIntersectional;
        if needs != self.intersection.is_some() {
            return Err(GenerationError::Scheme(if needs {
                "race_intersectional needs a group-to-gender mapping".into()
            } else {
                "only race_intersectional takes a group-to-gender mapping".into()
            }));
        }
        if self.variants_per_original == 0 {
            return Err(GenerationError::Scheme("variants_per_original must be positive".into()));
        }
        Ok(())
    }
}

/// Names available to the generator.
#[derive(Debug, Clone, Default)]
pub struct NameInventory {
    /// Census table with ambiguous names already resolved.
    pub census: GenderNameTable,
    pub race: Option<RaceNameTable>,
    /// Replacement last names for gender schemes with `alter_last_names`.
    pub last_names: Vec<String>,
}

impl NameInventory {
    pub fn new(census: &GenderNameTable, race: Option<RaceNameTable>) -> NameInventory {
        let last_names = race.as_ref().map(|r| r.all_last_names()).unwrap_or_default();
        NameInventory {
            census: census.resolve_ambiguous(),
            race,
            last_names,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EntityAssignment {
    pub entity: EntityId,
    /// Demographic group label: `male`/`female` or the race group.
    pub group: String,
    pub gender: Gender,
    pub first: String,
    pub last: Option<String>,
    /// Names this entity carries in the other variant of its pair.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub paired_first: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub paired_last: Option<String>,
}

/// An entity of a generated input as seen by the alignment stage.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct InputEntity {
    pub id: EntityId,
    #[serde(default)]
    pub group: Option<String>,
    #[serde(default)]
    pub gender: Option<Gender>,
    #[serde(default)]
    pub first: Option<String>,
    /// Token most often in final position of the entity's non-pronoun mentions.
    #[serde(default)]
    pub last: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GeneratedInput {
    pub id: String,
    pub original_id: String,
    pub variant: u32,
    #[serde(default)]
    pub pair_id: Option<String>,
    pub scheme: SchemeKind,
    pub seed: u64,
    pub assignments: Vec<EntityAssignment>,
    pub entities: Vec<InputEntity>,
    pub text: String,
    pub tokens: Vec<String>,
    /// Sentence index of every token.
    pub sentences: Vec<usize>,
}

impl GeneratedInput {
    pub fn sentence_tokens(&self) -> Vec<Vec<String>> {
        let n = self.sentences.last().map_or(0, |s| s + 1);
        let mut out = vec![Vec::new(); n];
        for (t, s) in self.tokens.iter().zip(&self.sentences) {
            out[*s].push(t.clone());
        }
        out
    }

    pub fn assignment(&self, entity: &str) -> Option<&EntityAssignment> {
        self.assignments.iter().find(|a| a.entity == entity)
    }
}

#[derive(Debug, thiserror::Error)]
pub enum GenerationError {
    #[error("invalid scheme: {0}")]
    Scheme(String),
    #[error("original {original}: {what}: need {needed} names, {available} available")]
    Inventory {
        original: String,
        what: String,
        needed: usize,
        available: usize,
    },
    #[error("original {original}: {source}")]
    Names {
        original: String,
        #[source]
        source: NameError,
    },
    #[error("{0}")]
    Render(#[from] RenderError),
}

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum RenderError {
    #[error("document {doc}: pronoun `{token}` has no gendered counterpart")]
    UnmappedPronoun { doc: String, token: String },
    #[error("document {doc}: title `{token}` has no gendered counterpart")]
    UnmappedTitle { doc: String, token: String },
    #[error("document {doc}: content span at {start} has mixed genders and no neutral variant")]
    MissingNeutral { doc: String, start: usize },
}

/// Entities that receive an assignment under `kind`.
pub fn assignable(template: &DocumentTemplate, kind: SchemeKind) -> Vec<&EntityTemplate> {
    template
        .entities
        .iter()
        .filter(|e| e.is_gendered || (kind.is_race() && e.has_name_slot()))
        .collect()
}

fn apply_case(original: &str, replacement: &str) -> String {
    let letters: Vec<char> = original.chars().filter(|c| c.is_alphabetic()).collect();
    if letters.len() > 1 && letters.iter().all(|c| c.is_uppercase()) {
        return replacement.to_uppercase();
    }
    if original.chars().next().is_some_and(|c| c.is_uppercase()) {
        let mut chars = replacement.chars();
        return match chars.next() {
            Some(c) => c.to_uppercase().chain(chars).collect(),
            None => String::new(),
        };
    }
    replacement.to_string()
}

/// Maps a gendered pronoun to `target`, keeping grammatical role and case.
/// `her` and `his` are disambiguated by the POS tag.
pub fn map_pronoun(token: &str, pos: &str, target: Gender) -> Option<String> {
    let possessive = pos == "PRP$";
    let male = target == Gender::Male;
    let base = match token.to_lowercase().as_str() {
        "he" | "she" => if male { "he" } else { "she" },
        "him" => if male { "him" } else { "her" },
        "her" if possessive => if male { "his" } else { "her" },
        "her" => if male { "him" } else { "her" },
        "his" if possessive => if male { "his" } else { "her" },
        "his" | "hers" => if male { "his" } else { "hers" },
        "himself" | "herself" => if male { "himself" } else { "herself" },
        _ => return None,
    };
    Some(apply_case(token, base))
}

/// Maps a title to `target`. Female `Mrs.`/`Ms.` and `Lady` stay as written;
/// `Mr.` becomes the entity's own female title, or `Ms.` when it never had one.
pub fn map_title(token: &str, target: Gender, female_title: Option<&str>) -> Option<String> {
    let canon = title_of(token)?;
    let mapped = match (canon, target) {
        ("Mr." | "Mrs." | "Ms.", Gender::Male) => "Mr.".to_string(),
        ("Sir" | "Lady", Gender::Male) => "Sir".to_string(),
        ("Mr.", Gender::Female) => female_title.and_then(title_of).unwrap_or("Ms.").to_string(),
        ("Sir" | "Lady", Gender::Female) => "Lady".to_string(),
        _ => return Some(token.to_string()),
    };
    let mapped = if token.ends_with('.') || !mapped.ends_with('.') {
        mapped
    } else {
        mapped.trim_end_matches('.').to_string()
    };
    Some(if token.chars().all(|c| !c.is_lowercase()) {
        mapped.to_uppercase()
    } else {
        mapped
    })
}

/// A rendered input plus the position of every original token.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Rendered {
    pub tokens: Vec<String>,
    pub sentences: Vec<usize>,
    /// For each original token, the rendered range of the piece holding it.
    pub positions: Vec<(usize, usize)>,
}

impl Rendered {
    pub fn span_tokens(&self, start: usize, end: usize) -> &[String] {
        &self.tokens[self.positions[start].0..self.positions[end].1]
    }
}

/// Fills the template's holes according to `assignments`. Entities without an
/// assignment keep their original tokens.
pub fn render(template: &DocumentTemplate, assignments: &[EntityAssignment]) -> Result<Rendered, RenderError> {
    let by_entity: BTreeMap<&str, &EntityAssignment> =
        assignments.iter().map(|a| (a.entity.as_str(), a)).collect();
    let mut tokens = Vec::with_capacity(template.tokens.len());
    let mut sentences = Vec::with_capacity(template.tokens.len());
    let mut positions = vec![(0, 0); template.tokens.len()];
    let mut orig = 0;
    for piece in template.frozen() {
        let (width, pieces): (usize, Vec<String>) = match piece {
            Piece::Text(t) => (1, vec![t.to_string()]),
            Piece::Slot(slot) => {
                let width = slot.span.len();
                let Some(a) = by_entity.get(slot.entity.as_str()) else {
                    positions_fill(&mut positions, orig, width, tokens.len(), slot.original.len());
                    for t in &slot.original {
                        tokens.push(t.clone());
                        sentences.push(template.sentences[orig]);
                    }
                    orig += width;
                    continue;
                };
                let ent = template.entity(&slot.entity).expect("slot entity exists");
                let out = match slot.category {
                    SlotCategory::FullName => {
                        let mut v = slot.original.clone();
                        v[0] = a.first.clone();
                        if let Some(last) = &a.last {
                            *v.last_mut().expect("non-empty") = last.clone();
                        }
                        v
                    }
                    SlotCategory::FirstName => vec![a.first.clone()],
                    SlotCategory::LastName => vec![a.last.clone().unwrap_or_else(|| slot.original[0].clone())],
                    SlotCategory::Pronoun => {
                        let pos = slot.pos.as_deref().unwrap_or_default();
                        vec![map_pronoun(&slot.original[0], pos, a.gender).ok_or_else(|| {
                            RenderError::UnmappedPronoun {
                                doc: template.id.clone(),
                                token: slot.original[0].clone(),
                            }
                        })?]
                    }
                    SlotCategory::Title => vec![map_title(&slot.original[0], a.gender, ent.female_title.as_deref())
                        .ok_or_else(|| RenderError::UnmappedTitle {
                            doc: template.id.clone(),
                            token: slot.original[0].clone(),
                        })?],
                };
                (width, out)
            }
            Piece::Content(c) => {
                let genders: BTreeSet<Option<Gender>> = c
                    .entities
                    .iter()
                    .map(|e| by_entity.get(e.as_str()).map(|a| a.gender))
                    .collect();
                let text = if genders.contains(&None) {
                    None
                } else if genders.len() == 1 {
                    match genders.into_iter().next().flatten() {
                        Some(Gender::Male) => Some(c.male_variant.clone()),
                        _ => Some(c.female_variant.clone()),
                    }
                } else {
                    Some(c.neutral_variant.clone().ok_or_else(|| RenderError::MissingNeutral {
                        doc: template.id.clone(),
                        start: c.span.start,
                    })?)
                };
                let out = match text {
                    Some(t) => t.split_whitespace().map(str::to_string).collect(),
                    None => c.original.clone(),
                };
                (c.span.len(), out)
            }
        };
        positions_fill(&mut positions, orig, width, tokens.len(), pieces.len());
        for t in pieces {
            tokens.push(t);
            sentences.push(template.sentences[orig]);
        }
        orig += width;
    }
    Ok(Rendered {
        tokens,
        sentences,
        positions,
    })
}

fn positions_fill(positions: &mut [(usize, usize)], orig: usize, width: usize, at: usize, len: usize) {
    for p in &mut positions[orig..orig + width] {
        *p = (at, at + len);
    }
}

/// Assignments that reproduce the original document: inferred names and the
/// gender suggested by the original pronouns and titles.
pub fn identity_assignments(template: &DocumentTemplate) -> Vec<EntityAssignment> {
    template
        .entities
        .iter()
        .map(|e| {
            let gender = e.original_gender.unwrap_or(Gender::Male);
            EntityAssignment {
                entity: e.id.clone(),
                group: gender.as_str().to_string(),
                gender,
                first: e.inferred_first.clone().unwrap_or_default(),
                last: e.inferred_last.clone(),
                paired_first: None,
                paired_last: None,
            }
        })
        .collect()
}

fn inventory_err(original: &str, what: &str, needed: usize, available: usize) -> GenerationError {
    GenerationError::Inventory {
        original: original.to_string(),
        what: what.to_string(),
        needed,
        available,
    }
}

/// Seed-independent check that the inventory can name every assignable entity.
pub fn check_inventory(
    template: &DocumentTemplate,
    scheme: &AssignmentScheme,
    inventory: &NameInventory,
) -> Result<(), GenerationError> {
    let n = assignable(template, scheme.kind).len();
    let id = &template.id;
    if scheme.kind.is_race() {
        let race = inventory
            .race
            .as_ref()
            .ok_or_else(|| GenerationError::Scheme("race schemes need a race name dictionary".into()))?;
        if race.groups.len() != 2 {
            return Err(GenerationError::Scheme(format!(
                "race dictionary must have exactly two groups, found {}",
                race.groups.len()
            )));
        }
        for (group, names) in &race.groups {
            let genders: Vec<Gender> = match scheme.intersection {
                Some(map) => vec![map.gender_of(group).ok_or_else(|| {
                    GenerationError::Scheme(format!("intersection has no gender for group {group}"))
                })?],
                None => vec![Gender::Male, Gender::Female],
            };
            for g in genders {
                if names.first(g).len() < n {
                    return Err(inventory_err(id, &format!("{group} {g} first names"), n, names.first(g).len()));
                }
            }
            if names.last.len() < n {
                return Err(inventory_err(id, &format!("{group} last names"), n, names.last.len()));
            }
        }
    } else {
        for g in [Gender::Male, Gender::Female] {
            let available = inventory.census.names(g).len();
            if available < n {
                return Err(inventory_err(id, &format!("{g} first names"), n, available));
            }
        }
        if scheme.alter_last_names && inventory.last_names.len() < n {
            return Err(inventory_err(id, "last names", n, inventory.last_names.len()));
        }
    }
    Ok(())
}

fn names_err(original: &str) -> impl Fn(NameError) -> GenerationError + '_ {
    move |source| GenerationError::Names {
        original: original.to_string(),
        source,
    }
}

/// Split of `n` entities into two labels: a random half gets `true`, the odd
/// one out is decided by a coin flip.
fn balanced_split(n: usize, rng: &mut Rng) -> Vec<bool> {
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(rng);
    let mut out = vec![false; n];
    for &i in &order[..n / 2] {
        out[i] = true;
    }
    if n % 2 == 1 {
        out[order[n - 1]] = rng.gen_bool(0.5);
    }
    out
}

/// Assignments for one variant of one original.
pub fn assign_groups(
    template: &DocumentTemplate,
    scheme: &AssignmentScheme,
    inventory: &NameInventory,
    master_seed: u64,
    variant: u32,
) -> Result<Vec<EntityAssignment>, GenerationError> {
    scheme.validate()?;
    check_inventory(template, scheme, inventory)?;
    let entities = assignable(template, scheme.kind);
    let n = entities.len();
    let id = template.id.as_str();
    let pair = variant / 2;
    let inverted = variant % 2 == 1;
    let weighted = scheme.weighted_names;

    let originals = |e: &EntityTemplate| e.inferred_last.as_ref().map(|l| l.to_string());
    let sampled_last = |rng: &mut Rng, pool: &NamePool| -> Result<Vec<String>, GenerationError> {
        sample_distinct(pool, n, &BTreeSet::new(), false, rng).map_err(names_err(id))
    };

    let out = match scheme.kind {
        SchemeKind::GenderLocal | SchemeKind::GenderGlobal => {
            let mut rng = if scheme.kind == SchemeKind::GenderLocal {
                derive_rng(master_seed, &["assign", id, &pair.to_string()])
            } else {
                derive_rng(master_seed, &["assign", id, &variant.to_string()])
            };
            let genders: Vec<Gender> = match scheme.kind {
                SchemeKind::GenderLocal => balanced_split(n, &mut rng)
                    .into_iter()
                    .map(|m| {
                        let g = if m { Gender::Male } else { Gender::Female };
                        if inverted { g.inverse() } else { g }
                    })
                    .collect(),
                _ => vec![if variant % 2 == 0 { Gender::Male } else { Gender::Female }; n],
            };
            let male = sample_distinct(&inventory.census.pool(Gender::Male), n, &BTreeSet::new(), weighted, &mut rng)
                .map_err(names_err(id))?;
            let female = sample_distinct(&inventory.census.pool(Gender::Female), n, &BTreeSet::new(), weighted, &mut rng)
                .map_err(names_err(id))?;
            let lasts = if scheme.alter_last_names {
                Some(sampled_last(&mut rng, &NamePool::uniform(inventory.last_names.iter().cloned()))?)
            } else {
                None
            };
            let flipped: Vec<Gender> = genders.iter().map(|g| g.inverse()).collect();
            let rank = |gs: &[Gender], i: usize| gs[..i].iter().filter(|&&x| x == gs[i]).count();
            entities
                .iter()
                .enumerate()
                .map(|(i, e)| {
                    let g = genders[i];
                    // the k-th entity of a gender takes that gender's k-th name, so
                    // both variants of a pair draw on the same two name lists
                    let name_for = |gs: &[Gender]| {
                        let k = rank(gs, i);
                        display_name(if gs[i] == Gender::Male { &male[k] } else { &female[k] })
                    };
                    let last = match &lasts {
                        Some(l) if e.inferred_last.is_some() => Some(display_name(&l[i])),
                        _ => originals(e),
                    };
                    EntityAssignment {
                        entity: e.id.clone(),
                        group: g.as_str().to_string(),
                        gender: g,
                        first: name_for(&genders),
                        paired_last: (scheme.kind == SchemeKind::GenderLocal).then(|| last.clone()).flatten(),
                        last,
                        paired_first: (scheme.kind == SchemeKind::GenderLocal).then(|| name_for(&flipped)),
                    }
                })
                .collect()
        }
        SchemeKind::RaceRandomGender | SchemeKind::RaceIntersectional => {
            let race = inventory.race.as_ref().expect("checked by check_inventory");
            let groups: Vec<&String> = race.groups.keys().collect();
            let mut rng = derive_rng(master_seed, &["assign", id, &pair.to_string()]);
            let first_group: Vec<usize> = balanced_split(n, &mut rng)
                .into_iter()
                .map(|a| usize::from(a == inverted))
                .collect();
            let random_gender: Vec<Gender> = (0..n)
                .map(|_| if rng.gen_bool(0.5) { Gender::Male } else { Gender::Female })
                .collect();
            let gender_in = |gi: usize, i: usize| -> Gender {
                match scheme.intersection {
                    Some(map) => map.gender_of(groups[gi]).expect("checked"),
                    None => random_gender[i],
                }
            };
            // per group: a first name for every entity under the gender it
            // would carry in that group, and a last name
            let mut firsts: Vec<Vec<String>> = Vec::new();
            let mut lasts: Vec<Vec<String>> = Vec::new();
            for (gi, group) in groups.iter().enumerate() {
                let names = &race.groups[*group];
                let mut row = vec![String::new(); n];
                for g in [Gender::Male, Gender::Female] {
                    let idx: Vec<usize> = (0..n).filter(|&i| gender_in(gi, i) == g).collect();
                    let pool = NamePool::uniform(names.first(g).iter().cloned());
                    let drawn = sample_distinct(&pool, idx.len(), &BTreeSet::new(), false, &mut rng)
                        .map_err(names_err(id))?;
                    for (k, i) in idx.into_iter().enumerate() {
                        row[i] = display_name(&drawn[k]);
                    }
                }
                firsts.push(row);
                lasts.push(
                    sampled_last(&mut rng, &NamePool::uniform(names.last.iter().cloned()))?
                        .iter()
                        .map(|l| display_name(l))
                        .collect(),
                );
            }
            entities
                .iter()
                .enumerate()
                .map(|(i, e)| {
                    let gi = first_group[i];
                    let other = 1 - gi;
                    let last = e.inferred_last.as_ref().map(|_| lasts[gi][i].clone());
                    EntityAssignment {
                        entity: e.id.clone(),
                        group: groups[gi].clone(),
                        gender: gender_in(gi, i),
                        first: firsts[gi][i].clone(),
                        last,
                        paired_first: Some(firsts[other][i].clone()),
                        paired_last: e.inferred_last.as_ref().map(|_| lasts[other][i].clone()),
                    }
                })
                .collect()
        }
    };
    Ok(out)
}

/// Builds one generated input.
pub fn generate_input(
    template: &DocumentTemplate,
    scheme: &AssignmentScheme,
    inventory: &NameInventory,
    master_seed: u64,
    variant: u32,
) -> Result<GeneratedInput, GenerationError> {
    let assignments = assign_groups(template, scheme, inventory, master_seed, variant)?;
    let rendered = render(template, &assignments)?;
    Ok(assemble(template, scheme.kind, master_seed, variant, assignments, rendered))
}

fn assemble(
    template: &DocumentTemplate,
    kind: SchemeKind,
    master_seed: u64,
    variant: u32,
    assignments: Vec<EntityAssignment>,
    rendered: Rendered,
) -> GeneratedInput {
    let entities = template
        .entities
        .iter()
        .map(|e| {
            let a = assignments.iter().find(|a| a.entity == e.id);
            let mentions: Vec<Vec<String>> = e
                .mentions
                .iter()
                .filter(|m| !m.pronoun)
                .map(|m| rendered.span_tokens(m.span.start, m.span.end).to_vec())
                .collect();
            InputEntity {
                id: e.id.clone(),
                group: a.map(|a| a.group.clone()),
                gender: a.map(|a| a.gender),
                first: a.map(|a| a.first.clone()).or_else(|| e.inferred_first.clone()),
                last: chain_last_name(&mentions),
            }
        })
        .collect();
    let pair_id = kind
        .is_paired()
        .then(|| format!("{}-p{:02}", template.id, variant / 2));
    GeneratedInput {
        id: format!("{}-v{:02}", template.id, variant),
        original_id: template.id.clone(),
        variant,
        pair_id,
        scheme: kind,
        seed: derive_seed(master_seed, &["assign", &template.id, &variant.to_string()]),
        assignments,
        entities,
        text: rendered.tokens.join(" "),
        tokens: rendered.tokens,
        sentences: rendered.sentences,
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DroppedOriginal {
    pub original: String,
    pub reason: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct GeneratedCorpus {
    pub inputs: Vec<GeneratedInput>,
    pub dropped: Vec<DroppedOriginal>,
}

/// Generates `variants_per_original` inputs for every eligible template.
/// Originals whose name inventory is too small are dropped as a whole; the
/// output is ordered by (original id, variant).
pub fn generate_corpus(
    templates: &[DocumentTemplate],
    scheme: &AssignmentScheme,
    inventory: &NameInventory,
    master_seed: u64,
) -> Result<GeneratedCorpus, GenerationError> {
    scheme.validate()?;
    let mut eligible: Vec<&DocumentTemplate> = templates.iter().filter(|t| t.eligible).collect();
    eligible.sort_by(|a, b| a.id.cmp(&b.id));
    let per_original: Vec<Result<Vec<GeneratedInput>, GenerationError>> = eligible
        .par_iter()
        .map(|t| {
            check_inventory(t, scheme, inventory)?;
            (0..scheme.variants_per_original)
                .map(|v| generate_input(t, scheme, inventory, master_seed, v))
                .collect()
        })
        .collect();
    let mut out = GeneratedCorpus::default();
    for (t, result) in eligible.iter().zip(per_original) {
        match result {
            Ok(inputs) => out.inputs.extend(inputs),
            Err(e @ GenerationError::Inventory { .. }) => out.dropped.push(DroppedOriginal {
                original: t.id.clone(),
                reason: e.to_string(),
            }),
            Err(e) => return Err(e),
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::parse_conll_corpus;
    use crate::names::GenderNameTable;
    use crate::template::build_template;

    fn census() -> GenderNameTable {
        let mut t = GenderNameTable::default();
        for (i, n) in ["james", "john", "robert", "michael", "david", "paul"].iter().enumerate() {
            t.male.insert(n.to_string(), 1.0 + i as f64);
        }
        for (i, n) in ["melissa", "mary", "linda", "susan", "karen", "lisa"].iter().enumerate() {
            t.female.insert(n.to_string(), 1.0 + i as f64);
        }
        t
    }

    fn levin() -> DocumentTemplate {
        let text = "d\t0\t0\tMr.\tNNP\t*\t(1\n\
            d\t0\t1\tLevin\tNNP\t(PERSON)\t1)\n\
            d\t0\t2\tsaid\tVBD\t*\t-\n\
            d\t0\t3\tHe\tPRP\t*\t(1)\n\
            d\t0\t4\tleft\tVBD\t*\t-\n\
            \n\
            d\t0\t0\tRobert\tNNP\t(PERSON*\t(1\n\
            d\t0\t1\tLevin\tNNP\t*)\t1)\n\
            d\t0\t2\tand\tCC\t*\t-\n\
            d\t0\t3\this\tPRP$\t*\t(1)\n\
            d\t0\t4\twife\tNN\t*\t-\n";
        build_template(&parse_conll_corpus(text).unwrap()[0])
    }

    #[test]
    fn pronoun_map_keeps_case_and_role() {
        assert_eq!(map_pronoun("He", "PRP", Gender::Female).as_deref(), Some("She"));
        assert_eq!(map_pronoun("her", "PRP", Gender::Male).as_deref(), Some("him"));
        assert_eq!(map_pronoun("her", "PRP$", Gender::Male).as_deref(), Some("his"));
        assert_eq!(map_pronoun("his", "PRP$", Gender::Female).as_deref(), Some("her"));
        assert_eq!(map_pronoun("his", "PRP", Gender::Female).as_deref(), Some("hers"));
        assert_eq!(map_pronoun("HIMSELF", "PRP", Gender::Female).as_deref(), Some("HERSELF"));
        assert_eq!(map_pronoun("they", "PRP", Gender::Female), None);
    }

    #[test]
    fn title_map() {
        assert_eq!(map_title("Mr.", Gender::Female, None).as_deref(), Some("Ms."));
        assert_eq!(map_title("Mr.", Gender::Female, Some("Mrs.")).as_deref(), Some("Mrs."));
        assert_eq!(map_title("Mrs.", Gender::Female, None).as_deref(), Some("Mrs."));
        assert_eq!(map_title("Mrs.", Gender::Male, None).as_deref(), Some("Mr."));
        assert_eq!(map_title("Sir", Gender::Female, None).as_deref(), Some("Lady"));
        assert_eq!(map_title("Lady", Gender::Male, None).as_deref(), Some("Sir"));
        assert_eq!(map_title("Mr", Gender::Female, None).as_deref(), Some("Ms"));
    }

    #[test]
    fn female_rendering_of_levin() {
        let t = levin();
        let a = vec![EntityAssignment {
            entity: "1".into(),
            group: "female".into(),
            gender: Gender::Female,
            first: "Melissa".into(),
            last: Some("Levin".into()),
            paired_first: None,
            paired_last: None,
        }];
        let r = render(&t, &a).unwrap();
        assert_eq!(
            r.tokens.join(" "),
            "Ms. Levin said She left Melissa Levin and her wife"
        );
    }

    #[test]
    fn identity_assignment_renders_original() {
        let t = levin();
        let r = render(&t, &identity_assignments(&t)).unwrap();
        assert_eq!(r.tokens, t.tokens);
        assert_eq!(r.tokens, t.fill_original());
    }

    #[test]
    fn content_word_uses_neutral_on_mixed_genders() {
        let text = "d\t0\t0\tJohn\tNNP\t(PERSON*\t(1\n\
            d\t0\t1\tSmith\tNNP\t*)\t1)\n\
            d\t0\t2\tand\tCC\t*\t-\n\
            d\t0\t3\tPaul\tNNP\t(PERSON*\t(2\n\
            d\t0\t4\tJones\tNNP\t*)\t2)\n\
            d\t0\t5\tare\tVBP\t*\t-\n\
            d\t0\t6\tbrothers\tNNS\t*\t-\n";
        let mut t = build_template(&parse_conll_corpus(text).unwrap()[0]);
        t.attach_content_words(&[crate::template::ContentWordAnnotation {
            document: "d".into(),
            start: 6,
            end: 6,
            entities: vec!["1".into(), "2".into()],
            male: "brothers".into(),
            female: "sisters".into(),
            neutral: Some("siblings".into()),
        }])
        .unwrap();
        let mk = |e: &str, g: Gender| EntityAssignment {
            entity: e.into(),
            group: g.as_str().into(),
            gender: g,
            first: "X".into(),
            last: None,
            paired_first: None,
            paired_last: None,
        };
        let r = render(&t, &[mk("1", Gender::Male), mk("2", Gender::Female)]).unwrap();
        assert_eq!(r.tokens[6], "siblings");
        let r = render(&t, &[mk("1", Gender::Female), mk("2", Gender::Female)]).unwrap();
        assert_eq!(r.tokens[6], "sisters");
    }

    fn multi_entity(n: usize) -> DocumentTemplate {
        let mut text = String::new();
        let firsts = ["Alan", "Brian", "Carl", "Dennis", "Eric", "Frank"];
        let lasts = ["Adams", "Brown", "Clark", "Davis", "Evans", "Ford"];
        for k in 0..n {
            text.push_str(&format!("d\t0\t0\t{}\tNNP\t(PERSON*\t({k}\n", firsts[k]));
            text.push_str(&format!("d\t0\t1\t{}\tNNP\t*)\t{k})\n", lasts[k]));
            text.push_str(&format!("d\t0\t2\tsaid\tVBD\t*\t-\n"));
            text.push_str(&format!("d\t0\t3\the\tPRP\t*\t({k})\n\n"));
        }
        build_template(&parse_conll_corpus(&text).unwrap()[0])
    }

    #[test]
    fn local_balance_and_pair_inversion() {
        let inv = NameInventory::new(&census(), None);
        let scheme = AssignmentScheme::new(SchemeKind::GenderLocal);
        for n in [3, 4] {
            let t = multi_entity(n);
            for pair in 0..5 {
                let a = assign_groups(&t, &scheme, &inv, 11, 2 * pair).unwrap();
                let b = assign_groups(&t, &scheme, &inv, 11, 2 * pair + 1).unwrap();
                let males = a.iter().filter(|x| x.gender == Gender::Male).count();
                assert!((2 * males as i64 - n as i64).abs() <= 1);
                if n == 4 {
                    assert_eq!(males, 2);
                }
                for (x, y) in a.iter().zip(&b) {
                    assert_eq!(x.gender, y.gender.inverse());
                    assert_eq!(x.paired_first.as_ref(), Some(&y.first));
                    assert_eq!(y.paired_first.as_ref(), Some(&x.first));
                }
                let firsts: BTreeSet<_> = a.iter().map(|x| &x.first).collect();
                assert_eq!(firsts.len(), n);
                let names = |v: &[EntityAssignment], g: Gender| -> BTreeSet<String> {
                    v.iter().filter(|x| x.gender == g).map(|x| x.first.clone()).collect()
                };
                for g in [Gender::Male, Gender::Female] {
                    let (x, y) = (names(&a, g), names(&b, g));
                    assert!(x.is_subset(&y) || y.is_subset(&x), "{x:?} vs {y:?}");
                    if n == 4 {
                        assert_eq!(x, y);
                    }
                }
            }
        }
    }

    #[test]
    fn global_alternates_gender() {
        let inv = NameInventory::new(&census(), None);
        let scheme = AssignmentScheme::new(SchemeKind::GenderGlobal);
        let t = multi_entity(3);
        for v in 0..4 {
            let a = assign_groups(&t, &scheme, &inv, 5, v).unwrap();
            let want = if v % 2 == 0 { Gender::Male } else { Gender::Female };
            assert!(a.iter().all(|x| x.gender == want));
        }
    }

    #[test]
    fn scheme_validation() {
        let mut s = AssignmentScheme::new(SchemeKind::RaceIntersectional);
        assert!(s.validate().is_err());
        s.intersection = Some(Intersection {
            black: Gender::Male,
            white: Gender::Female,
        });
        assert!(s.validate().is_ok());
        let mut g = AssignmentScheme::new(SchemeKind::GenderLocal);
        g.intersection = s.intersection;
        assert!(g.validate().is_err());
    }

    #[test]
    fn corpus_is_deterministic_and_counted() {
        let inv = NameInventory::new(&census(), None);
        let scheme = AssignmentScheme::new(SchemeKind::GenderLocal);
        let ts = vec![multi_entity(2), levin()];
        let ts: Vec<DocumentTemplate> = ts
            .into_iter()
            .enumerate()
            .map(|(i, mut t)| {
                t.id = format!("doc{i}");
                t
            })
            .collect();
        let a = generate_corpus(&ts, &scheme, &inv, 3).unwrap();
        let b = generate_corpus(&ts, &scheme, &inv, 3).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.inputs.len(), 40);
        assert_eq!(a.inputs[0].original_id, "doc0");
        assert_eq!(a.inputs[39].variant, 19);
    }

    #[test]
    fn small_inventory_drops_original() {
        let mut small = GenderNameTable::default();
        small.male.insert("al".into(), 1.0);
        small.female.insert("bea".into(), 1.0);
        let inv = NameInventory::new(&small, None);
        let scheme = AssignmentScheme::new(SchemeKind::GenderLocal);
        let mut t = multi_entity(3);
        t.id = "x".into();
        let mut ok = levin();
        ok.id = "y".into();
        let out = generate_corpus(&[t, ok], &scheme, &inv, 1).unwrap();
        assert_eq!(out.dropped.len(), 1);
        assert_eq!(out.inputs.len(), 20);
    }
}
