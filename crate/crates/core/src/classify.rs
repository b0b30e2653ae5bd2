//! Apparent gender of hallucinated entities: an encyclopedia page lookup
//! first, then the census first-name lists.

use crate::names::GenderNameTable;
use crate::template::is_title;
use crate::{normalize_token, Gender};
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, HashMap};
use std::path::Path;
use std::sync::Mutex;

pub const MALE_PRONOUNS: [&str; 4] = ["he", "him", "his", "himself"];
pub const FEMALE_PRONOUNS: [&str; 4] = ["she", "her", "hers", "herself"];
const PERSON_CATEGORY_WORDS: [&str; 3] = ["births", "deaths", "people"];

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EncyclopediaPage {
    #[serde(default)]
    pub categories: Vec<String>,
    #[serde(default)]
    pub counts: BTreeMap<String, u64>,
}

impl EncyclopediaPage {
    pub fn is_person(&self) -> bool {
        self.categories.iter().any(|c| {
            let c = c.to_lowercase();
            PERSON_CATEGORY_WORDS.iter().any(|w| c.contains(w))
        })
    }

    fn count(&self, words: &[&str]) -> u64 {
        words.iter().map(|w| self.counts.get(*w).copied().unwrap_or(0)).sum()
    }

    /// Majority of gendered pronoun counts; `None` on a tie.
    pub fn pronoun_gender(&self) -> Option<Gender> {
        let (m, f) = (self.count(&MALE_PRONOUNS), self.count(&FEMALE_PRONOUNS));
        match m.cmp(&f) {
            std::cmp::Ordering::Greater => Some(Gender::Male),
            std::cmp::Ordering::Less => Some(Gender::Female),
            std::cmp::Ordering::Equal => None,
        }
    }
}

#[derive(Debug, thiserror::Error, Clone, PartialEq, Eq)]
pub enum LookupError {
    #[error("lookup of `{title}` failed: {message}")]
    Transport { title: String, message: String },
    #[error("cannot load encyclopedia cache {path}: {message}")]
    Cache { path: String, message: String },
}

/// Source of encyclopedia pages. Every page sharing the exact title is
/// returned; an empty result means no page.
pub trait LookupClient: Send + Sync {
    fn query(&self, title: &str) -> Result<Vec<EncyclopediaPage>, LookupError>;
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum CacheEntry {
    Redirect { redirect: String },
    Page(EncyclopediaPage),
    Namesakes(Vec<EncyclopediaPage>),
}

/// Offline page store read from a JSON object keyed by title. Titles match
/// case-insensitively and a redirect is followed for one hop.
#[derive(Debug, Clone, Default)]
pub struct FixtureCache {
    entries: HashMap<String, CacheEntry>,
}

impl FixtureCache {
    pub fn from_json(text: &str) -> Result<FixtureCache, serde_json::Error> {
        let raw: BTreeMap<String, CacheEntry> = serde_json::from_str(text)?;
        Ok(FixtureCache {
            entries: raw.into_iter().map(|(k, v)| (k.to_lowercase(), v)).collect(),
        })
    }

    pub fn load(path: &Path) -> Result<FixtureCache, LookupError> {
        let err = |message: String| LookupError::Cache {
            path: path.display().to_string(),
            message,
        };
        let text = std::fs::read_to_string(path).map_err(|e| err(e.to_string()))?;
        FixtureCache::from_json(&text).map_err(|e| err(e.to_string()))
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    fn pages(entry: &CacheEntry) -> Vec<EncyclopediaPage> {
        match entry {
            CacheEntry::Page(p) => vec![p.clone()],
            CacheEntry::Namesakes(ps) => ps.clone(),
            CacheEntry::Redirect { .. } => Vec::new(),
        }
    }
}

impl LookupClient for FixtureCache {
    fn query(&self, title: &str) -> Result<Vec<EncyclopediaPage>, LookupError> {
        Ok(match self.entries.get(&title.to_lowercase()) {
            Some(CacheEntry::Redirect { redirect }) => self
                .entries
                .get(&redirect.to_lowercase())
                .map(FixtureCache::pages)
                .unwrap_or_default(),
            Some(entry) => FixtureCache::pages(entry),
            None => Vec::new(),
        })
    }
}

/// Memoizes another client so repeated queries see identical answers.
pub struct CachedClient<C> {
    inner: C,
    memo: Mutex<HashMap<String, Result<Vec<EncyclopediaPage>, LookupError>>>,
}

impl<C: LookupClient> CachedClient<C> {
    pub fn new(inner: C) -> CachedClient<C> {
        CachedClient {
            inner,
            memo: Mutex::new(HashMap::new()),
        }
    }
}

impl<C: LookupClient> LookupClient for CachedClient<C> {
    fn query(&self, title: &str) -> Result<Vec<EncyclopediaPage>, LookupError> {
        let key = title.to_lowercase();
        if let Some(hit) = self.memo.lock().expect("memo lock").get(&key) {
            return hit.clone();
        }
        let answer = self.inner.query(title);
        self.memo
            .lock()
            .expect("memo lock")
            .entry(key)
            .or_insert(answer)
            .clone()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum VerdictLabel {
    Male,
    Female,
    Unknown,
}

impl VerdictLabel {
    pub fn gender(self) -> Option<Gender> {
        match self {
            VerdictLabel::Male => Some(Gender::Male),
            VerdictLabel::Female => Some(Gender::Female),
            VerdictLabel::Unknown => None,
        }
    }

    fn from_gender(g: Option<Gender>) -> VerdictLabel {
        match g {
            Some(Gender::Male) => VerdictLabel::Male,
            Some(Gender::Female) => VerdictLabel::Female,
            None => VerdictLabel::Unknown,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum VerdictSource {
    Encyclopedia,
    Census,
    None,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct GenderVerdict {
    pub label: VerdictLabel,
    pub source: VerdictSource,
}

impl GenderVerdict {
    pub const UNKNOWN: GenderVerdict = GenderVerdict {
        label: VerdictLabel::Unknown,
        source: VerdictSource::None,
    };
}

fn name_tokens(tokens: &[String]) -> Vec<&String> {
    tokens.iter().filter(|t| !is_title(t)).collect()
}

/// Page-based verdict, or `Ok(None)` when there is no person page for the
/// entity. Single-word names are never looked up.
pub fn classify_encyclopedia(tokens: &[String], client: &dyn LookupClient) -> Result<Option<GenderVerdict>, LookupError> {
    let names = name_tokens(tokens);
    if names.len() < 2 {
        return Ok(None);
    }
    let title = names.iter().map(|s| s.as_str()).collect::<Vec<_>>().join(" ");
    let pages: Vec<EncyclopediaPage> = client.query(&title)?.into_iter().filter(|p| p.is_person()).collect();
    if pages.is_empty() {
        return Ok(None);
    }
    let genders: Vec<Option<Gender>> = pages.iter().map(EncyclopediaPage::pronoun_gender).collect();
    let agreed = if genders.iter().all(|g| *g == genders[0]) { genders[0] } else { None };
    Ok(Some(GenderVerdict {
        label: VerdictLabel::from_gender(agreed),
        source: VerdictSource::Encyclopedia,
    }))
}

/// Census verdict from an ambiguity-resolved name table.
pub fn classify_census(tokens: &[String], table: &GenderNameTable) -> GenderVerdict {
    let norm: Vec<String> = name_tokens(tokens).into_iter().map(|t| normalize_token(t)).collect();
    let male = norm.iter().any(|t| table.male.contains_key(t));
    let female = norm.iter().any(|t| table.female.contains_key(t));
    let label = match (male, female) {
        (true, false) => VerdictLabel::Male,
        (false, true) => VerdictLabel::Female,
        _ => VerdictLabel::Unknown,
    };
    GenderVerdict {
        label,
        source: if male || female { VerdictSource::Census } else { VerdictSource::None },
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Classification {
    pub verdict: GenderVerdict,
    pub warning: Option<String>,
}

/// Encyclopedia verdict when a page exists, census verdict otherwise. A
/// failing client degrades to the census with a warning.
pub fn classify(tokens: &[String], client: &dyn LookupClient, table: &GenderNameTable) -> Classification {
    match classify_encyclopedia(tokens, client) {
        Ok(Some(verdict)) => Classification { verdict, warning: None },
        Ok(None) => Classification {
            verdict: classify_census(tokens, table),
            warning: None,
        },
        Err(e) => Classification {
            verdict: classify_census(tokens, table),
            warning: Some(e.to_string()),
        },
    }
}

/// A classified hallucination, one output line per hallucinated entity.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct HallucinationRow {
    pub input_id: String,
    pub system: String,
    pub entity_tokens: Vec<String>,
    pub label: VerdictLabel,
    pub source: VerdictSource,
}

#[cfg(test)]
mod tests {
    use super::*;

    fn v(s: &str) -> Vec<String> {
        s.split_whitespace().map(str::to_string).collect()
    }

    fn cache() -> FixtureCache {
        FixtureCache::from_json(
            r#"{
              "Boris Yeltsin": {"categories": ["1931 births", "2007 deaths"], "counts": {"he": 120, "his": 80, "she": 2}},
              "Pat Nixon": {"categories": ["First ladies of the United States", "1993 deaths"], "counts": {"she": 90, "her": 150, "he": 12}},
              "Alex Tie": {"categories": ["Living people"], "counts": {"he": 5, "she": 5}},
              "Sam Jordan": [
                 {"categories": ["1950 births"], "counts": {"he": 30}},
                 {"categories": ["1970 births"], "counts": {"she": 40}}
              ],
              "Acme Corp": {"categories": ["Companies"], "counts": {"he": 3}},
              "B. Yeltsin": {"redirect": "Boris Yeltsin"}
            }"#,
        )
        .unwrap()
    }

    fn census() -> GenderNameTable {
        let mut t = GenderNameTable::default();
        t.male.insert("john".into(), 1.0);
        t.female.insert("melissa".into(), 1.0);
        t
    }

    #[test]
    fn encyclopedia_examples() {
        let c = cache();
        let m = classify_encyclopedia(&v("Boris Yeltsin"), &c).unwrap().unwrap();
        assert_eq!(m.label, VerdictLabel::Male);
        assert_eq!(classify_encyclopedia(&v("Obama"), &c).unwrap(), None);
        let tie = classify_encyclopedia(&v("Alex Tie"), &c).unwrap().unwrap();
        assert_eq!(tie.label, VerdictLabel::Unknown);
        let namesakes = classify_encyclopedia(&v("Sam Jordan"), &c).unwrap().unwrap();
        assert_eq!(namesakes.label, VerdictLabel::Unknown);
        assert_eq!(classify_encyclopedia(&v("Acme Corp"), &c).unwrap(), None);
        assert_eq!(
            classify_encyclopedia(&v("b. yeltsin"), &c).unwrap().unwrap().label,
            VerdictLabel::Male
        );
    }

    #[test]
    fn census_examples() {
        let t = census();
        assert_eq!(classify_census(&v("Melissa Levin"), &t).label, VerdictLabel::Female);
        assert_eq!(classify_census(&v("John Melissa"), &t).label, VerdictLabel::Unknown);
        assert_eq!(classify_census(&v("Pat Nixon"), &t), GenderVerdict::UNKNOWN);
    }

    #[test]
    fn stage_order() {
        let (c, t) = (cache(), census());
        let p = classify(&v("Pat Nixon"), &c, &t);
        assert_eq!(p.verdict.label, VerdictLabel::Female);
        assert_eq!(p.verdict.source, VerdictSource::Encyclopedia);
        let m = classify(&v("Melissa Zzyzx"), &c, &t);
        assert_eq!(m.verdict.source, VerdictSource::Census);
        assert_eq!(classify(&v("Qwerty Zzyzx"), &c, &t).verdict, GenderVerdict::UNKNOWN);
    }

    struct Broken;
    impl LookupClient for Broken {
        fn query(&self, title: &str) -> Result<Vec<EncyclopediaPage>, LookupError> {
            Err(LookupError::Transport {
                title: title.into(),
                message: "offline".into(),
            })
        }
    }

    #[test]
    fn transport_failure_degrades() {
        let r = classify(&v("Melissa Levin"), &CachedClient::new(Broken), &census());
        assert_eq!(r.verdict.label, VerdictLabel::Female);
        assert!(r.warning.is_some());
    }
}
