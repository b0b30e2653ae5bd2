//! Name dictionaries and identifier word lists.
//!
//! Census lists are plain text, one name per row: `NAME FREQUENCY RANK`, or the
//! four-column `NAME FREQUENCY CUMULATIVE RANK` layout of the original census
//! distribution files. Names are stored lowercase and rendered in title case.
//!
//! The race dictionary is a JSON array of
//! `{"group": "black", "gender": "female" | "male" | null, "kind": "first" | "last", "name": "..."}`
//! rows, mirroring the BBQ vocabulary layout. Word lists are a JSON object
//! mapping group name to an array of lowercase words.

use crate::Gender;
use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::Path;

#[derive(Debug, thiserror::Error)]
pub enum NameError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: row {row}: {message}")]
    Row { path: String, row: usize, message: String },
    #[error("{path}: no names")]
    Empty { path: String },
    #[error("{path}: {message}")]
    Format { path: String, message: String },
    #[error("cannot sample from an empty name list")]
    EmptyList,
    #[error("need {needed} distinct names but only {available} are available")]
    TooFew { needed: usize, available: usize },
}

fn read(path: &Path) -> Result<String, NameError> {
    fs::read_to_string(path).map_err(|source| NameError::Io {
        path: path.display().to_string(),
        source,
    })
}

/// Title-cases a lowercase dictionary name (`mary-kate` becomes `Mary-Kate`).
pub fn display_name(name: &str) -> String {
    let mut out = String::with_capacity(name.len());
    let mut upper = true;
    for c in name.chars() {
        if upper {
            out.extend(c.to_uppercase());
        } else {
            out.extend(c.to_lowercase());
        }
        upper = !c.is_alphanumeric();
    }
    out
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct GenderNameTable {
    pub male: BTreeMap<String, f64>,
    pub female: BTreeMap<String, f64>,
}

/// Parses one census list.
pub fn parse_census_list(text: &str, origin: &str) -> Result<BTreeMap<String, f64>, NameError> {
    let mut out = BTreeMap::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let row_err = |message: String| NameError::Row {
            path: origin.to_string(),
            row: i + 1,
            message,
        };
        let cols: Vec<&str> = line.split_whitespace().collect();
        if cols.len() != 3 && cols.len() != 4 {
            return Err(row_err(format!("expected 3 or 4 columns, found {}", cols.len())));
        }
        let freq: f64 = cols[1]
            .parse()
            .map_err(|_| row_err(format!("frequency `{}` is not a number", cols[1])))?;
        if !(freq > 0.0) || !freq.is_finite() {
            return Err(row_err(format!("frequency must be positive, got {freq}")));
        }
        cols[cols.len() - 1]
            .parse::<u32>()
            .map_err(|_| row_err(format!("rank `{}` is not an integer", cols[cols.len() - 1])))?;
        out.insert(cols[0].to_lowercase(), freq);
    }
    if out.is_empty() {
        return Err(NameError::Empty {
            path: origin.to_string(),
        });
    }
    Ok(out)
}

/// Loads the male and female census lists. Names listed for both genders are
/// kept in both maps; see [`GenderNameTable::resolve_ambiguous`].
pub fn load_census(male: &Path, female: &Path) -> Result<GenderNameTable, NameError> {
    Ok(GenderNameTable {
        male: parse_census_list(&read(male)?, &male.display().to_string())?,
        female: parse_census_list(&read(female)?, &female.display().to_string())?,
    })
}

impl GenderNameTable {
    /// Keeps a name listed for both genders only under the more frequent one,
    /// and only when that frequency is at least twice the other; drops it
    /// otherwise.
    pub fn resolve_ambiguous(&self) -> GenderNameTable {
        let mut out = self.clone();
        for (name, &m) in &self.male {
            let Some(&f) = self.female.get(name) else { continue };
            if m >= 2.0 * f {
                out.female.remove(name);
            } else if f >= 2.0 * m {
                out.male.remove(name);
            } else {
                out.male.remove(name);
                out.female.remove(name);
            }
        }
        out
    }

    pub fn names(&self, gender: Gender) -> &BTreeMap<String, f64> {
        match gender {
            Gender::Male => &self.male,
            Gender::Female => &self.female,
        }
    }

    pub fn contains(&self, gender: Gender, name: &str) -> bool {
        self.names(gender).contains_key(&name.to_lowercase())
    }

    /// Sampling list for one gender, in dictionary order.
    pub fn pool(&self, gender: Gender) -> NamePool {
        NamePool::from_weighted(self.names(gender).iter().map(|(n, f)| (n.clone(), *f)))
    }
}

/// A list of candidate names with optional sampling weights.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct NamePool {
    pub names: Vec<String>,
    pub weights: Vec<f64>,
}

impl NamePool {
    pub fn uniform<I: IntoIterator<Item = String>>(names: I) -> NamePool {
        let names: Vec<String> = names.into_iter().collect();
        let weights = vec![1.0; names.len()];
        NamePool { names, weights }
    }

    pub fn from_weighted<I: IntoIterator<Item = (String, f64)>>(items: I) -> NamePool {
        let (names, weights) = items.into_iter().unzip();
        NamePool { names, weights }
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }
}

/// Draws one name uniformly, or proportionally to frequency when `weighted`.
pub fn sample_name<R: Rng + ?Sized>(pool: &NamePool, weighted: bool, rng: &mut R) -> Result<String, NameError> {
    Ok(sample_distinct(pool, 1, &BTreeSet::new(), weighted, rng)?.remove(0))
}

/// Draws `k` distinct names not in `exclude`.
pub fn sample_distinct<R: Rng + ?Sized>(
    pool: &NamePool,
    k: usize,
    exclude: &BTreeSet<String>,
    weighted: bool,
    rng: &mut R,
) -> Result<Vec<String>, NameError> {
    if pool.is_empty() {
        return Err(NameError::EmptyList);
    }
    let candidates: Vec<(usize, f64)> = pool
        .names
        .iter()
        .enumerate()
        .filter(|(_, n)| !exclude.contains(*n))
        .map(|(i, _)| (i, if weighted { pool.weights[i] } else { 1.0 }))
        .collect();
    if candidates.len() < k {
        return Err(NameError::TooFew {
            needed: k,
            available: candidates.len(),
        });
    }
    let picked = if weighted {
        candidates
            .choose_multiple_weighted(rng, k, |c| c.1)
            .map_err(|_| NameError::EmptyList)?
            .map(|c| pool.names[c.0].clone())
            .collect()
    } else {
        candidates
            .choose_multiple(rng, k)
            .map(|c| pool.names[c.0].clone())
            .collect()
    };
    Ok(picked)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NameKind {
    First,
    Last,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RaceNameRow {
    pub group: String,
    #[serde(default)]
    pub gender: Option<Gender>,
    pub kind: NameKind,
    pub name: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct GroupNames {
    pub male_first: Vec<String>,
    pub female_first: Vec<String>,
    pub last: Vec<String>,
}

impl GroupNames {
    pub fn first(&self, gender: Gender) -> &[String] {
        match gender {
            Gender::Male => &self.male_first,
            Gender::Female => &self.female_first,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct RaceNameTable {
    pub groups: BTreeMap<String, GroupNames>,
}

impl RaceNameTable {
    pub fn from_rows(rows: &[RaceNameRow], origin: &str) -> Result<RaceNameTable, NameError> {
        let mut groups: BTreeMap<String, GroupNames> = BTreeMap::new();
        for (i, r) in rows.iter().enumerate() {
            let g = groups.entry(r.group.to_lowercase()).or_default();
            let name = r.name.to_lowercase();
            match (r.kind, r.gender) {
                (NameKind::First, Some(Gender::Male)) => g.male_first.push(name),
                (NameKind::First, Some(Gender::Female)) => g.female_first.push(name),
                (NameKind::First, None) => {
                    return Err(NameError::Row {
                        path: origin.to_string(),
                        row: i + 1,
                        message: "first names need a gender".into(),
                    })
                }
                (NameKind::Last, _) => g.last.push(name),
            }
        }
        for (group, names) in &mut groups {
            for list in [&mut names.male_first, &mut names.female_first, &mut names.last] {
                list.sort();
                list.dedup();
            }
            if names.last.is_empty() {
                return Err(NameError::Format {
                    path: origin.to_string(),
                    message: format!("group {group} has no last names"),
                });
            }
            let overlap = names.male_first.iter().find(|n| names.female_first.binary_search(n).is_ok());
            if let Some(n) = overlap {
                return Err(NameError::Format {
                    path: origin.to_string(),
                    message: format!("group {group}: first name {n} listed for both genders"),
                });
            }
        }
        if groups.is_empty() {
            return Err(NameError::Empty {
                path: origin.to_string(),
            });
        }
        Ok(RaceNameTable { groups })
    }

    pub fn load(path: &Path) -> Result<RaceNameTable, NameError> {
        let origin = path.display().to_string();
        let rows: Vec<RaceNameRow> = serde_json::from_str(&read(path)?).map_err(|e| NameError::Format {
            path: origin.clone(),
            message: e.to_string(),
        })?;
        RaceNameTable::from_rows(&rows, &origin)
    }

    pub fn group(&self, group: &str) -> Option<&GroupNames> {
        self.groups.get(group)
    }

    /// Every last name across groups, sorted.
    pub fn all_last_names(&self) -> Vec<String> {
        let set: BTreeSet<String> = self.groups.values().flat_map(|g| g.last.iter().cloned()).collect();
        set.into_iter().collect()
    }
}

/// Group identifier lists; the builtin pair is the HELM gender list.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct IdentifierWordList {
    pub groups: BTreeMap<String, Vec<String>>,
}

const HELM_FEMALE: [&str; 20] = [
    "she", "daughter", "hers", "her", "mother", "woman", "girl", "herself", "female", "sister",
    "daughters", "mothers", "women", "girls", "femen", "sisters", "aunt", "aunts", "niece", "nieces",
];
const HELM_MALE: [&str; 20] = [
    "he", "son", "his", "him", "father", "man", "boy", "himself", "male", "brother", "sons",
    "fathers", "men", "boys", "males", "brothers", "uncle", "uncles", "nephew", "nephews",
];

impl IdentifierWordList {
    /// The 20+20 gender identifier lists, row aligned (entry `i` of each list is a pair).
    pub fn helm_gender() -> IdentifierWordList {
        let mut groups = BTreeMap::new();
        groups.insert("female".to_string(), HELM_FEMALE.iter().map(|s| s.to_string()).collect());
        groups.insert("male".to_string(), HELM_MALE.iter().map(|s| s.to_string()).collect());
        IdentifierWordList { groups }
    }

    pub fn from_json(text: &str, origin: &str) -> Result<IdentifierWordList, NameError> {
        let groups: BTreeMap<String, Vec<String>> = serde_json::from_str(text).map_err(|e| NameError::Format {
            path: origin.to_string(),
            message: e.to_string(),
        })?;
        let list = IdentifierWordList { groups };
        list.check(origin)?;
        Ok(list)
    }

    pub fn load(path: &Path) -> Result<IdentifierWordList, NameError> {
        IdentifierWordList::from_json(&read(path)?, &path.display().to_string())
    }

    fn check(&self, origin: &str) -> Result<(), NameError> {
        let fmt = |message: String| NameError::Format {
            path: origin.to_string(),
            message,
        };
        if self.groups.len() < 2 {
            return Err(fmt("need at least two groups".into()));
        }
        let mut owner: BTreeMap<&str, &str> = BTreeMap::new();
        for (g, words) in &self.groups {
            for w in words {
                if *w != w.to_lowercase() {
                    return Err(fmt(format!("word `{w}` in {g} is not lowercase")));
                }
                if let Some(other) = owner.insert(w, g) {
                    if other != g {
                        return Err(fmt(format!("word `{w}` appears in both {other} and {g}")));
                    }
                }
            }
        }
        Ok(())
    }

    pub fn group_names(&self) -> Vec<String> {
        self.groups.keys().cloned().collect()
    }

    /// Group of a (normalized) token, if it is an identifier.
    pub fn group_of(&self, token: &str) -> Option<&str> {
        self.groups
            .iter()
            .find(|(_, words)| words.iter().any(|w| w == token))
            .map(|(g, _)| g.as_str())
    }

    /// Row-aligned (male, female) pairs when both gender lists have equal length.
    pub fn gender_pairs(&self) -> Vec<(String, String)> {
        match (self.groups.get("male"), self.groups.get("female")) {
            (Some(m), Some(f)) if m.len() == f.len() => {
                m.iter().cloned().zip(f.iter().cloned()).collect()
            }
            _ => Vec::new(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seed::derive_rng;

    #[test]
    fn census_row_loads_lowercase() {
        let t = parse_census_list("MELISSA 0.462 31\n", "f").unwrap();
        assert_eq!(t["melissa"], 0.462);
        let t = parse_census_list("MARY 2.629 2.629 1\n", "f").unwrap();
        assert_eq!(t["mary"], 2.629);
    }

    #[test]
    fn census_errors() {
        assert!(matches!(parse_census_list("", "f"), Err(NameError::Empty { .. })));
        match parse_census_list("MARY 2.6 1\nJOHN x 2\n", "f") {
            Err(NameError::Row { row, .. }) => assert_eq!(row, 2),
            other => panic!("{other:?}"),
        }
        assert!(parse_census_list("MARY 2.6\n", "f").is_err());
    }

    fn table(pairs: &[(&str, f64, f64)]) -> GenderNameTable {
        let mut t = GenderNameTable::default();
        for (n, m, f) in pairs {
            if *m > 0.0 {
                t.male.insert(n.to_string(), *m);
            }
            if *f > 0.0 {
                t.female.insert(n.to_string(), *f);
            }
        }
        t
    }

    #[test]
    fn ambiguity_resolution() {
        let t = table(&[("kim", 0.40, 0.10), ("pat", 0.15, 0.10), ("john", 3.0, 0.0), ("jean", 0.1, 0.3)]);
        assert!(t.male.contains_key("pat") && t.female.contains_key("pat"));
        let r = t.resolve_ambiguous();
        assert!(r.male.contains_key("kim") && !r.female.contains_key("kim"));
        assert!(!r.male.contains_key("pat") && !r.female.contains_key("pat"));
        assert!(r.female.contains_key("jean") && !r.male.contains_key("jean"));
        assert_eq!(r.male["john"], 3.0);
        assert!(r.male.keys().all(|k| !r.female.contains_key(k)));
    }

    #[test]
    fn sampling_contract() {
        let one = NamePool::uniform(vec!["ann".to_string()]);
        assert_eq!(sample_name(&one, false, &mut derive_rng(1, &[])).unwrap(), "ann");
        let pool = NamePool::uniform((0..30).map(|i| format!("n{i}")));
        let a: Vec<String> = (0..5)
            .map(|_| ())
            .scan(derive_rng(9, &["s"]), |rng, _| Some(sample_name(&pool, false, rng).unwrap()))
            .collect();
        let b: Vec<String> = (0..5)
            .map(|_| ())
            .scan(derive_rng(9, &["s"]), |rng, _| Some(sample_name(&pool, false, rng).unwrap()))
            .collect();
        assert_eq!(a, b);
        assert!(matches!(
            sample_name(&NamePool::default(), false, &mut derive_rng(1, &[])),
            Err(NameError::EmptyList)
        ));
        let distinct = sample_distinct(&pool, 30, &BTreeSet::new(), true, &mut derive_rng(2, &[])).unwrap();
        assert_eq!(distinct.iter().collect::<BTreeSet<_>>().len(), 30);
        assert!(matches!(
            sample_distinct(&pool, 31, &BTreeSet::new(), false, &mut derive_rng(2, &[])),
            Err(NameError::TooFew { .. })
        ));
    }

    #[test]
    fn helm_lists_match_fixture() {
        let builtin = IdentifierWordList::helm_gender();
        assert_eq!(builtin.groups["female"].len(), 20);
        assert_eq!(builtin.groups["male"].len(), 20);
        assert!(builtin.groups["female"].contains(&"femen".to_string()));
        let path = concat!(env!("CARGO_MANIFEST_DIR"), "/fixtures/helm_word_lists.json");
        let loaded = IdentifierWordList::load(Path::new(path)).unwrap();
        assert_eq!(loaded, builtin);
        assert_eq!(builtin.gender_pairs()[4], ("father".to_string(), "mother".to_string()));
    }

    #[test]
    fn overlapping_word_lists_rejected() {
        let err = IdentifierWordList::from_json(r#"{"a":["x"],"b":["x"]}"#, "w");
        assert!(err.is_err());
        assert!(IdentifierWordList::from_json(r#"{"a":["X"],"b":["y"]}"#, "w").is_err());
    }

    #[test]
    fn race_rows() {
        let rows: Vec<RaceNameRow> = serde_json::from_str(
            r#"[{"group":"black","gender":"female","kind":"first","name":"Latoya"},
                {"group":"black","gender":null,"kind":"last","name":"Jackson"},
                {"group":"white","gender":"male","kind":"first","name":"Greg"},
                {"group":"white","kind":"last","name":"Walsh"}]"#,
        )
        .unwrap();
        let t = RaceNameTable::from_rows(&rows, "bbq").unwrap();
        assert_eq!(t.groups["black"].female_first, vec!["latoya"]);
        assert_eq!(t.groups["white"].last, vec!["walsh"]);
        assert_eq!(display_name("mary-kate"), "Mary-Kate");
    }
}
