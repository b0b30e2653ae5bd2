//! End-to-end runs driven by a TOML configuration.
//!
//! Expensive stages (ingest, templates, generation) write JSONL artifacts named
//! `{stage}-{hash}` where the hash covers the stage's inputs and parameters, so
//! a rerun reuses them and a changed configuration never picks up stale data.

use crate::align::{align_corpus, AlignmentRow, AlignmentStatus, CorpusAlignment};
use crate::classify::{classify, CachedClient, FixtureCache, HallucinationRow, LookupClient};
use crate::ingest::{read_conll_corpus, AnnotatedDocument};
use crate::jsonl::{read_jsonl, write_jsonl};
use crate::measures::{
    bag_of_words, count_identifiers, distinguishability_by, entity_inclusion, hallucination_bias, neutralize,
    score_with_ci, word_list_inclusion, DistinguishItem, GroupDistribution, InclusionTable, Reference, Resampled,
    Unit, Vector, DEFAULT_REPLICATES, DEFAULT_SMOOTHING,
};
use crate::names::{load_census, GenderNameTable, IdentifierWordList, RaceNameTable};
use crate::perturb::{generate_corpus, AssignmentScheme, DroppedOriginal, GeneratedInput, NameInventory};
use crate::report::{top_hallucinations, write_report, BiasReport, ScoreRow, SystemReport};
use crate::seed::derive_seed;
use crate::summary::{apply_ner_side_file, join_summaries, Lexicon, NerSideRow, SummaryRecord, SummaryRow};
use crate::synthetic::{identity_summaries, lead_summaries};
use crate::template::{build_template, ContentWordAnnotation, DocumentTemplate};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::collections::{BTreeMap, HashMap};
use std::fs;
use std::path::{Path, PathBuf};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NamesConfig {
    pub census_male: PathBuf,
    pub census_female: PathBuf,
    #[serde(default)]
    pub race: Option<PathBuf>,
}

/// Run parameters. Relative paths resolve against the directory of the
/// configuration file. Summary sources are JSONL paths or one of the built-in
/// systems `builtin:identity` and `builtin:lead`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PipelineConfig {
    pub seed: u64,
    pub corpus: PathBuf,
    #[serde(default = "default_output")]
    pub output_dir: PathBuf,
    #[serde(default = "default_replicates")]
    pub replicates: usize,
    #[serde(default = "default_smoothing")]
    pub smoothing: f64,
    #[serde(default)]
    pub content_words: Option<PathBuf>,
    #[serde(default)]
    pub word_lists: Option<PathBuf>,
    #[serde(default)]
    pub encyclopedia_cache: Option<PathBuf>,
    #[serde(default)]
    pub ner_side_file: Option<PathBuf>,
    pub scheme: AssignmentScheme,
    pub names: NamesConfig,
    pub summaries: BTreeMap<String, String>,
    #[serde(default)]
    pub dense_vectors: BTreeMap<String, PathBuf>,
    #[serde(skip)]
    pub base_dir: PathBuf,
}

fn default_output() -> PathBuf {
    PathBuf::from("out")
}

fn default_replicates() -> usize {
    DEFAULT_REPLICATES
}

fn default_smoothing() -> f64 {
    DEFAULT_SMOOTHING
}

#[derive(Debug, thiserror::Error)]
pub enum PipelineError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("stage {stage}: {message}")]
    Data { stage: &'static str, message: String },
    #[error("stage {stage} failed{}: {message}", .record.as_ref().map(|r| format!(" at {r}")).unwrap_or_default())]
    Stage {
        stage: &'static str,
        record: Option<String>,
        message: String,
    },
}

impl PipelineError {
    pub fn exit_code(&self) -> i32 {
        match self {
            PipelineError::Config(_) | PipelineError::Data { .. } => 2,
            PipelineError::Stage { .. } => 3,
        }
    }

    pub fn data(stage: &'static str, e: impl std::fmt::Display) -> PipelineError {
        PipelineError::Data {
            stage,
            message: e.to_string(),
        }
    }

    pub fn stage(stage: &'static str, record: Option<String>, e: impl std::fmt::Display) -> PipelineError {
        PipelineError::Stage {
            stage,
            record,
            message: e.to_string(),
        }
    }
}

impl PipelineConfig {
    pub fn from_toml(text: &str, base_dir: &Path) -> Result<PipelineConfig, PipelineError> {
        let mut c: PipelineConfig = toml::from_str(text).map_err(|e| PipelineError::Config(e.to_string()))?;
        c.base_dir = base_dir.to_path_buf();
        c.scheme.validate().map_err(|e| PipelineError::Config(e.to_string()))?;
        if c.replicates < 2 {
            return Err(PipelineError::Config("replicates must be at least 2".into()));
        }
        Ok(c)
    }

    pub fn load(path: &Path) -> Result<PipelineConfig, PipelineError> {
        let text = fs::read_to_string(path).map_err(|e| PipelineError::Config(format!("{}: {e}", path.display())))?;
        let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        PipelineConfig::from_toml(&text, &base)
    }

    pub fn resolve(&self, p: &Path) -> PathBuf {
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.base_dir.join(p)
        }
    }

    /// The configuration as TOML without the output directory, which does
    /// not affect any result.
    pub fn canonical(&self) -> String {
        let mut c = self.clone();
        c.output_dir = PathBuf::new();
        let mut v = toml::Value::try_from(&c).expect("config serializes");
        if let Some(t) = v.as_table_mut() {
            t.remove("output_dir");
        }
        toml::to_string(&v).expect("config serializes")
    }

    /// Every referenced file must exist before any stage runs.
    pub fn check_paths(&self) -> Result<(), PipelineError> {
        let mut files: Vec<(&'static str, Option<String>, &Path)> = vec![
            ("ingest", None, &self.corpus),
            ("generate", None, &self.names.census_male),
            ("generate", None, &self.names.census_female),
        ];
        for (stage, p) in [
            ("generate", &self.names.race),
            ("templates", &self.content_words),
            ("score", &self.word_lists),
            ("classify", &self.encyclopedia_cache),
            ("summaries", &self.ner_side_file),
        ] {
            if let Some(p) = p {
                files.push((stage, None, p));
            }
        }
        for (system, src) in &self.summaries {
            if builtin(src).is_none() {
                files.push(("summaries", Some(system.clone()), Path::new(src)));
            }
        }
        for (system, p) in &self.dense_vectors {
            files.push(("score", Some(system.clone()), p));
        }
        for (stage, record, p) in files {
            let path = self.resolve(p);
            if !path.is_file() {
                return Err(PipelineError::stage(
                    stage,
                    record,
                    format!("missing file {}", path.display()),
                ));
            }
        }
        Ok(())
    }
}

fn builtin(src: &str) -> Option<&str> {
    src.strip_prefix("builtin:")
}

fn digest_file(path: &Path) -> Result<String, PipelineError> {
    let bytes = fs::read(path).map_err(|e| PipelineError::data("config", format!("{}: {e}", path.display())))?;
    Ok(hex::encode(Sha256::digest(&bytes)))
}

fn stage_key(parts: &[&str]) -> String {
    let mut h = Sha256::new();
    for p in parts {
        h.update((p.len() as u64).to_le_bytes());
        h.update(p.as_bytes());
    }
    hex::encode(&h.finalize()[..8])
}

/// Loads `{dir}/{stage}-{key}.jsonl` if present, otherwise computes and
/// stores it.
fn artifact<T, F>(dir: &Path, stage: &'static str, key: &str, compute: F) -> Result<Vec<T>, PipelineError>
where
    T: Serialize + DeserializeOwned,
    F: FnOnce() -> Result<Vec<T>, PipelineError>,
{
    let path = dir.join(format!("{stage}-{key}.jsonl"));
    if path.is_file() {
        return read_jsonl(&path).map_err(|e| PipelineError::data(stage, e));
    }
    let items = compute()?;
    let tmp = dir.join(format!(".{stage}-{key}.tmp"));
    write_jsonl(&tmp, &items).map_err(|e| PipelineError::stage(stage, None, e))?;
    fs::rename(&tmp, &path).map_err(|e| PipelineError::stage(stage, None, e))?;
    Ok(items)
}

/// Templates for `docs` with optional content-word annotations attached.
pub fn build_templates(
    docs: &[AnnotatedDocument],
    content: &[ContentWordAnnotation],
) -> Result<Vec<DocumentTemplate>, PipelineError> {
    docs.iter()
        .map(|d| {
            let mut t = build_template(d);
            t.attach_content_words(content)
                .map_err(|e| PipelineError::stage("templates", Some(t.id.clone()), e))?;
            Ok(t)
        })
        .collect()
}

/// Summary rows for a configured system.
pub fn summary_rows(config: &PipelineConfig, system: &str, inputs: &[GeneratedInput]) -> Result<Vec<SummaryRow>, PipelineError> {
    let src = &config.summaries[system];
    match builtin(src) {
        Some("identity") => Ok(identity_summaries(inputs, system)),
        Some("lead") => Ok(lead_summaries(inputs, system)),
        Some(other) => Err(PipelineError::Config(format!("unknown built-in summarizer `{other}`"))),
        None => {
            let rows: Vec<SummaryRow> = read_jsonl(&config.resolve(Path::new(src)))
                .map_err(|e| PipelineError::stage("summaries", Some(system.to_string()), e))?;
            Ok(rows
                .into_iter()
                .map(|mut r| {
                    r.system = system.to_string();
                    r
                })
                .collect())
        }
    }
}

/// Everything the scores of one summary depend on.
#[derive(Debug, Clone)]
pub struct SummaryUnit {
    pub summary_ids: BTreeMap<String, u64>,
    pub input_ids: BTreeMap<String, u64>,
    pub inclusion: InclusionTable,
    pub hallucinations: BTreeMap<String, u64>,
    pub bow: Option<DistinguishItem>,
    pub dense: Option<DistinguishItem>,
}

/// Group shared by every assigned entity of an input, if there is one.
pub fn single_group(input: &GeneratedInput) -> Option<&str> {
    let first = input.assignments.first()?.group.as_str();
    input.assignments.iter().all(|a| a.group == first).then_some(first)
}

/// Builds one scoring unit per summary of `system`.
pub fn summary_units(
    records: &[&SummaryRecord],
    inputs: &HashMap<&str, &GeneratedInput>,
    alignment: &CorpusAlignment,
    hallucinations: &[HallucinationRow],
    lists: &IdentifierWordList,
    dense: Option<&DenseVectors>,
) -> Vec<Unit<SummaryUnit>> {
    let included = alignment.included();
    let mut halluc: HashMap<(&str, &str), BTreeMap<String, u64>> = HashMap::new();
    for h in hallucinations {
        if let Some(g) = h.label.gender() {
            *halluc
                .entry((h.system.as_str(), h.input_id.as_str()))
                .or_default()
                .entry(g.as_str().to_string())
                .or_default() += 1;
        }
    }
    let empty = Default::default();
    records
        .iter()
        .map(|rec| {
            let input = inputs[rec.input_id.as_str()];
            let inc = included
                .get(&(rec.system.clone(), rec.input_id.clone()))
                .unwrap_or(&empty);
            let mut inclusion = InclusionTable::default();
            for e in &input.entities {
                if let Some(g) = &e.group {
                    inclusion.add(g, inc.contains(&e.id));
                }
            }
            let group = single_group(input).map(str::to_string);
            let bow = group.clone().map(|g| DistinguishItem {
                original: input.original_id.clone(),
                group: g,
                vector: bag_of_words(&neutralize(&rec.tokens, &input.assignments)),
            });
            let dense = dense.and_then(|d| {
                let v = d
                    .get(&(rec.input_id.clone(), Some(rec.system.clone())))
                    .or_else(|| d.get(&(rec.input_id.clone(), None)))?;
                Some(DistinguishItem {
                    original: input.original_id.clone(),
                    group: group.clone()?,
                    vector: Vector::Dense(v.clone()),
                })
            });
            Unit {
                original: input.original_id.clone(),
                variant: input.variant,
                item: SummaryUnit {
                    summary_ids: count_identifiers([rec.tokens.as_slice()], lists),
                    input_ids: count_identifiers(input.sentence_tokens().iter().map(Vec::as_slice), lists),
                    inclusion,
                    hallucinations: halluc
                        .get(&(rec.system.as_str(), rec.input_id.as_str()))
                        .cloned()
                        .unwrap_or_default(),
                    bow,
                    dense,
                },
            }
        })
        .collect()
}

fn sum_counts<'a>(it: impl Iterator<Item = &'a BTreeMap<String, u64>>) -> BTreeMap<String, u64> {
    let mut out = BTreeMap::new();
    for m in it {
        for (k, v) in m {
            *out.entry(k.clone()).or_insert(0) += v;
        }
    }
    out
}

pub fn score_word_list(s: &[Resampled<'_, SummaryUnit>], adjusted: bool) -> Option<f64> {
    let obs = sum_counts(s.iter().map(|r| &r.unit.item.summary_ids));
    let reference = if adjusted {
        Reference::Given(GroupDistribution::from_counts(&sum_counts(s.iter().map(|r| &r.unit.item.input_ids))).ok()?)
    } else {
        Reference::Uniform
    };
    word_list_inclusion(&obs, &reference).ok()
}

pub fn score_inclusion(s: &[Resampled<'_, SummaryUnit>], smoothing: f64) -> Option<f64> {
    let mut t = InclusionTable::default();
    for r in s {
        t.merge(&r.unit.item.inclusion);
    }
    entity_inclusion(&t, smoothing).ok()
}

pub fn score_hallucination(s: &[Resampled<'_, SummaryUnit>]) -> Option<f64> {
    hallucination_bias(&sum_counts(s.iter().map(|r| &r.unit.item.hallucinations)), &["male", "female"]).ok()
}

pub fn score_distinguishability(s: &[Resampled<'_, SummaryUnit>], dense: bool) -> Option<f64> {
    let items: Vec<((usize, &str), &DistinguishItem)> = s
        .iter()
        .filter_map(|r| {
            let it = if dense { r.unit.item.dense.as_ref() } else { r.unit.item.bow.as_ref() }?;
            Some(((r.copy, r.unit.original.as_str()), it))
        })
        .collect();
    distinguishability_by(&items).ok().map(|d| d.score)
}

/// Scores with bootstrap intervals for one system.
pub fn score_system(
    system: &str,
    units: &[Unit<SummaryUnit>],
    config_seed: u64,
    replicates: usize,
    smoothing: f64,
    has_dense: bool,
) -> Vec<ScoreRow> {
    type ScoreFn<'a> = Box<dyn Fn(&[Resampled<'_, SummaryUnit>]) -> Option<f64> + Sync + 'a>;
    let mut measures: Vec<(&str, bool, ScoreFn)> = vec![
        ("word_list", true, Box::new(|s| score_word_list(s, true))),
        ("word_list_uniform", true, Box::new(|s| score_word_list(s, false))),
        ("entity_inclusion", true, Box::new(move |s| score_inclusion(s, smoothing))),
        ("hallucination", true, Box::new(score_hallucination)),
        ("distinguishability_bow", false, Box::new(|s| score_distinguishability(s, false))),
    ];
    if has_dense {
        measures.push(("distinguishability_dense", false, Box::new(|s| score_distinguishability(s, true))));
    }
    measures
        .into_iter()
        .map(|(measure, with_s, f)| {
            let seed = derive_seed(config_seed, &["bootstrap", system, measure]);
            match score_with_ci(units, &f, with_s, replicates, seed) {
                Ok(s) => ScoreRow {
                    system: system.to_string(),
                    measure: measure.to_string(),
                    point: Some(s.point),
                    ci_d: s.ci_d,
                    ci_s: s.ci_s,
                    n: s.n,
                    replicates,
                    diagnostics: s.diagnostics,
                },
                Err(e) => ScoreRow {
                    system: system.to_string(),
                    measure: measure.to_string(),
                    point: None,
                    ci_d: None,
                    ci_s: None,
                    n: units.len(),
                    replicates,
                    diagnostics: vec![e.to_string()],
                },
            }
        })
        .collect()
}

pub type DenseVectors = HashMap<(String, Option<String>), Vec<f64>>;

pub struct ScoreInputs<'a> {
    pub records: &'a [SummaryRecord],
    pub inputs: &'a [GeneratedInput],
    pub alignment: &'a CorpusAlignment,
    pub hallucinations: &'a [HallucinationRow],
    pub lists: &'a IdentifierWordList,
    pub dense: &'a BTreeMap<String, DenseVectors>,
}

#[derive(Debug, Clone, Copy)]
pub struct ScoreParams {
    pub seed: u64,
    pub replicates: usize,
    pub smoothing: f64,
}

/// Score rows and per-system summaries for each system in `systems`.
pub fn score_all(systems: &[String], data: &ScoreInputs<'_>, params: &ScoreParams) -> (Vec<ScoreRow>, Vec<SystemReport>) {
    let by_id: HashMap<&str, &GeneratedInput> = data.inputs.iter().map(|i| (i.id.as_str(), i)).collect();
    let mut scores = Vec::new();
    let mut reports = Vec::new();
    for system in systems {
        let dense = data.dense.get(system);
        let recs: Vec<&SummaryRecord> = data.records.iter().filter(|r| &r.system == system).collect();
        let units = summary_units(&recs, &by_id, data.alignment, data.hallucinations, data.lists, dense);
        scores.extend(score_system(
            system,
            &units,
            params.seed,
            params.replicates,
            params.smoothing,
            dense.is_some(),
        ));
        reports.push(SystemReport {
            system: system.clone(),
            alignment: data.alignment.counts.get(system).cloned().unwrap_or_default(),
            hallucinations: top_hallucinations(data.hallucinations, system, 10),
        });
    }
    (scores, reports)
}

/// Adds classified hallucinations with a gender verdict to the alignment counts.
pub fn count_gendered_hallucinations(alignment: &mut CorpusAlignment, hallucinations: &[HallucinationRow]) {
    for h in hallucinations {
        if h.label.gender().is_some() {
            if let Some(c) = alignment.counts.get_mut(&h.system) {
                c.hallucinated_with_gender += 1;
            }
        }
    }
}

/// Classifies every hallucinated alignment row.
pub fn classify_rows(
    rows: &[AlignmentRow],
    client: &dyn LookupClient,
    census: &GenderNameTable,
) -> (Vec<HallucinationRow>, Vec<String>) {
    let mut warnings = Vec::new();
    let out = rows
        .iter()
        .filter(|r| r.status == AlignmentStatus::Hallucinated)
        .map(|r| {
            let c = classify(&r.entity_tokens, client, census);
            if let Some(w) = c.warning {
                warnings.push(w);
            }
            HallucinationRow {
                input_id: r.input_id.clone(),
                system: r.system.clone(),
                entity_tokens: r.entity_tokens.clone(),
                label: c.verdict.label,
                source: c.verdict.source,
            }
        })
        .collect();
    (out, warnings)
}

/// Intermediate products of a run, for callers that want more than the report.
#[derive(Debug, Clone)]
pub struct RunOutput {
    pub report: BiasReport,
    pub inputs: Vec<GeneratedInput>,
    pub alignment: CorpusAlignment,
    pub hallucinations: Vec<HallucinationRow>,
}

pub fn run_pipeline(config: &PipelineConfig) -> Result<RunOutput, PipelineError> {
    config.check_paths()?;
    let out_dir = config.resolve(&config.output_dir);
    let art = out_dir.join("artifacts");
    fs::create_dir_all(&art).map_err(|e| PipelineError::stage("setup", None, e))?;

    let corpus = config.resolve(&config.corpus);
    let ingest_key = stage_key(&["ingest", &digest_file(&corpus)?]);
    let docs: Vec<AnnotatedDocument> = artifact(&art, "ingest", &ingest_key, || {
        read_conll_corpus(&corpus).map_err(|e| PipelineError::data("ingest", e))
    })?;

    let content_path = config.content_words.as_ref().map(|p| config.resolve(p));
    let content_digest = match &content_path {
        Some(p) => digest_file(p)?,
        None => String::new(),
    };
    let templates_key = stage_key(&["templates", &ingest_key, &content_digest]);
    let templates: Vec<DocumentTemplate> = artifact(&art, "templates", &templates_key, || {
        let content: Vec<ContentWordAnnotation> = match &content_path {
            Some(p) => read_jsonl(p).map_err(|e| PipelineError::data("templates", e))?,
            None => Vec::new(),
        };
        build_templates(&docs, &content)
    })?;

    let census = load_census(
        &config.resolve(&config.names.census_male),
        &config.resolve(&config.names.census_female),
    )
    .map_err(|e| PipelineError::data("generate", e))?;
    let race = match &config.names.race {
        Some(p) => Some(RaceNameTable::load(&config.resolve(p)).map_err(|e| PipelineError::data("generate", e))?),
        None => None,
    };
    let mut name_digests = vec![
        digest_file(&config.resolve(&config.names.census_male))?,
        digest_file(&config.resolve(&config.names.census_female))?,
    ];
    if let Some(p) = &config.names.race {
        name_digests.push(digest_file(&config.resolve(p))?);
    }
    let scheme_json = serde_json::to_string(&config.scheme).expect("scheme serializes");
    let seed = config.seed.to_string();
    let mut parts = vec!["generate", &templates_key, &scheme_json, &seed];
    parts.extend(name_digests.iter().map(String::as_str));
    let generate_key = stage_key(&parts);
    let inventory = NameInventory::new(&census, race);
    let dropped_path = art.join(format!("dropped-{generate_key}.jsonl"));
    let mut dropped: Vec<DroppedOriginal> = Vec::new();
    let inputs: Vec<GeneratedInput> = artifact(&art, "generate", &generate_key, || {
        let g = generate_corpus(&templates, &config.scheme, &inventory, config.seed).map_err(|e| {
            let record = match &e {
                crate::perturb::GenerationError::Inventory { original, .. }
                | crate::perturb::GenerationError::Names { original, .. } => Some(original.clone()),
                crate::perturb::GenerationError::Render(r) => Some(format!("{r:?}")),
                _ => None,
            };
            PipelineError::stage("generate", record, e)
        })?;
        write_jsonl(&dropped_path, &g.dropped).map_err(|e| PipelineError::stage("generate", None, e))?;
        Ok(g.inputs)
    })?;
    if dropped_path.is_file() {
        dropped = read_jsonl(&dropped_path).map_err(|e| PipelineError::data("generate", e))?;
    }

    let resolved = census.resolve_ambiguous();
    let lexicon = Lexicon::from_inputs(&inputs, Some(&resolved));
    let ner: Vec<NerSideRow> = match &config.ner_side_file {
        Some(p) => read_jsonl(&config.resolve(p)).map_err(|e| PipelineError::data("summaries", e))?,
        None => Vec::new(),
    };
    let mut records: Vec<SummaryRecord> = Vec::new();
    for system in config.summaries.keys() {
        let rows = summary_rows(config, system, &inputs)?;
        let mut joined = join_summaries(rows, &inputs, &lexicon)
            .map_err(|e| PipelineError::stage("summaries", Some(system.clone()), e))?;
        apply_ner_side_file(&mut joined, &ner).map_err(|e| PipelineError::stage("summaries", Some(system.clone()), e))?;
        records.extend(joined);
    }
    records.sort_by(|a, b| (&a.system, &a.input_id).cmp(&(&b.system, &b.input_id)));

    let mut alignment = align_corpus(&records, &inputs);
    write_jsonl(&out_dir.join("alignments.jsonl"), &alignment.rows).map_err(|e| PipelineError::stage("align", None, e))?;

    let cache = match &config.encyclopedia_cache {
        Some(p) => FixtureCache::load(&config.resolve(p)).map_err(|e| PipelineError::data("classify", e))?,
        None => FixtureCache::default(),
    };
    let client = CachedClient::new(cache);
    let (hallucinations, warnings) = classify_rows(&alignment.rows, &client, &resolved);
    write_jsonl(&out_dir.join("hallucinations.jsonl"), &hallucinations)
        .map_err(|e| PipelineError::stage("classify", None, e))?;
    count_gendered_hallucinations(&mut alignment, &hallucinations);

    let lists = match &config.word_lists {
        Some(p) => IdentifierWordList::load(&config.resolve(p)).map_err(|e| PipelineError::data("score", e))?,
        None => IdentifierWordList::helm_gender(),
    };
    let mut dense = BTreeMap::new();
    for (system, p) in &config.dense_vectors {
        let d = crate::measures::load_dense_vectors(&config.resolve(p))
            .map_err(|e| PipelineError::stage("score", Some(system.clone()), e))?;
        dense.insert(system.clone(), d);
    }
    let systems: Vec<String> = config.summaries.keys().cloned().collect();
    let (scores, systems) = score_all(
        &systems,
        &ScoreInputs {
            records: &records,
            inputs: &inputs,
            alignment: &alignment,
            hallucinations: &hallucinations,
            lists: &lists,
            dense: &dense,
        },
        &ScoreParams {
            seed: config.seed,
            replicates: config.replicates,
            smoothing: config.smoothing,
        },
    );
    let mut diagnostics: Vec<String> = warnings;
    diagnostics.extend(dropped.iter().map(|d| format!("dropped {}: {}", d.original, d.reason)));
    let report = BiasReport {
        config: config.canonical(),
        inputs: inputs.len(),
        dropped_originals: dropped.len(),
        scores,
        systems,
        diagnostics,
    };
    write_report(&report, &out_dir).map_err(|e| PipelineError::stage("report", None, e))?;
    Ok(RunOutput {
        report,
        inputs,
        alignment,
        hallucinations,
    })
}
