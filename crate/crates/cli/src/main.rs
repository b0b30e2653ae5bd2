use clap::{Args, Parser, Subcommand};
use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use sumbias::align::{align_corpus, AlignmentRow};
use sumbias::classify::{CachedClient, FixtureCache, HallucinationRow};
use sumbias::ingest::{read_conll_corpus, validate_document, AnnotatedDocument};
use sumbias::input_bias::{
    classify_topic, fightin_words, simulation_experiment, split_by_identifier_majority, TextDocument, TopicLists,
};
use sumbias::jsonl::{read_jsonl, write_jsonl};
use sumbias::measures::load_dense_vectors;
use sumbias::names::{load_census, GenderNameTable, IdentifierWordList, RaceNameTable};
use sumbias::perturb::{generate_corpus, AssignmentScheme, GeneratedInput, Intersection, NameInventory, SchemeKind};
use sumbias::pipeline::{
    build_templates, classify_rows, count_gendered_hallucinations, run_pipeline, score_all, PipelineConfig,
    PipelineError, ScoreInputs, ScoreParams,
};
use sumbias::report::{render_report, top_hallucinations, BiasReport, ReportFormat, ScoreRow, SystemReport};
use sumbias::summary::{apply_ner_side_file, join_summaries, Lexicon, NerSideRow, SummaryRecord, SummaryRow};
use sumbias::synthetic::{topic_corpus, TopicCorpusConfig};
use sumbias::template::{ContentWordAnnotation, DocumentTemplate};
use sumbias::Gender;

#[derive(Parser)]
#[command(name = "sumbias", version, about = "Demographic bias probes for summarization systems")]
struct Cli {
    /// Worker threads for parallel stages (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Parse a CoNLL-2012 style corpus into annotated-document JSONL.
    Ingest {
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Turn annotated documents into entity templates.
    BuildTemplates {
        /// Annotated-document JSONL or a CoNLL file.
        #[arg(long)]
        docs: PathBuf,
        #[arg(long)]
        content_words: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Fill templates with demographic assignments.
    Generate(GenerateArgs),
    /// Align summary entities with input entities.
    Align(AlignArgs),
    /// Assign a gender verdict to every hallucinated entity.
    ClassifyHallucinations(ClassifyArgs),
    /// Bias scores with bootstrap intervals.
    Score(ScoreArgs),
    /// Fightin' Words contrast and topic counts of a corpus.
    AnalyzeInputBias {
        #[command(flatten)]
        source: TextSource,
        #[arg(long)]
        word_lists: Option<PathBuf>,
        #[arg(long, default_value_t = 20)]
        top: usize,
        /// Output directory.
        #[arg(long)]
        out: PathBuf,
    },
    /// Word-list inclusion of the four extractive baselines.
    SimulateBaselines {
        #[command(flatten)]
        source: TextSource,
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        word_lists: Option<PathBuf>,
        /// Output directory.
        #[arg(long)]
        out: PathBuf,
    },
    /// Render a report, either from a report JSON or from a scores file.
    Report {
        #[arg(long, conflicts_with = "scores", required_unless_present = "scores")]
        from: Option<PathBuf>,
        #[arg(long)]
        scores: Option<PathBuf>,
        #[arg(long, requires = "scores")]
        hallucinations: Option<PathBuf>,
        #[arg(long, default_value = "markdown")]
        format: String,
        #[arg(long)]
        out: PathBuf,
    },
    /// Every stage end to end from a configuration file.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        output_dir: Option<PathBuf>,
        #[arg(long)]
        replicates: Option<usize>,
    },
}

#[derive(Args)]
struct NameArgs {
    #[arg(long)]
    census_male: Option<PathBuf>,
    #[arg(long)]
    census_female: Option<PathBuf>,
}

#[derive(Args)]
struct ConfigArg {
    /// Configuration file supplying defaults; flags take precedence.
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Args)]
struct GenerateArgs {
    #[command(flatten)]
    cfg: ConfigArg,
    #[arg(long)]
    templates: PathBuf,
    /// gender_local, gender_global, race_random_gender or race_intersectional.
    #[arg(long)]
    scheme: Option<String>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    alter_last_names: bool,
    #[arg(long)]
    weighted_names: bool,
    #[arg(long)]
    variants: Option<u32>,
    /// Genders for race_intersectional, e.g. `black=female,white=male`.
    #[arg(long)]
    intersection: Option<String>,
    #[arg(long)]
    content_words: Option<PathBuf>,
    #[command(flatten)]
    names: NameArgs,
    #[arg(long)]
    race_names: Option<PathBuf>,
    /// Where to list originals dropped for lack of names.
    #[arg(long)]
    dropped: Option<PathBuf>,
}

#[derive(Args)]
struct SummaryArgs {
    #[arg(long)]
    inputs: PathBuf,
    /// Summary JSONL with `input_id`, `system` and `summary`.
    #[arg(long)]
    summaries: PathBuf,
    #[arg(long)]
    ner: Option<PathBuf>,
    #[command(flatten)]
    names: NameArgs,
}

#[derive(Args)]
struct AlignArgs {
    #[command(flatten)]
    cfg: ConfigArg,
    #[command(flatten)]
    summaries: SummaryArgs,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct ClassifyArgs {
    #[command(flatten)]
    cfg: ConfigArg,
    #[arg(long)]
    alignments: PathBuf,
    #[arg(long)]
    cache: Option<PathBuf>,
    #[command(flatten)]
    names: NameArgs,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct ScoreArgs {
    #[command(flatten)]
    cfg: ConfigArg,
    #[command(flatten)]
    summaries: SummaryArgs,
    #[arg(long)]
    hallucinations: Option<PathBuf>,
    #[arg(long)]
    word_lists: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    replicates: Option<usize>,
    #[arg(long)]
    smoothing: Option<f64>,
    /// Dense summary vectors for one system, as `system=path`. Repeatable.
    #[arg(long)]
    dense: Vec<String>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct TextSource {
    /// CoNLL corpus, or JSONL of `{id, sentences}` documents.
    #[arg(long, required_unless_present = "synthetic", conflicts_with = "synthetic")]
    corpus: Option<PathBuf>,
    /// Use the built-in topic-correlated corpus with this many documents.
    #[arg(long)]
    synthetic: Option<usize>,
    /// Seed for the built-in corpus.
    #[arg(long, default_value_t = 0)]
    corpus_seed: u64,
}

type Res<T> = Result<T, PipelineError>;

fn data(stage: &'static str) -> impl Fn(String) -> PipelineError {
    move |m| PipelineError::data(stage, m)
}

fn write_out(stage: &'static str, path: &Path, contents: &str) -> Res<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| PipelineError::stage(stage, None, e))?;
    }
    fs::write(path, contents).map_err(|e| PipelineError::stage(stage, None, format!("{}: {e}", path.display())))
}

fn write_rows<T: serde::Serialize>(stage: &'static str, path: &Path, rows: &[T]) -> Res<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| PipelineError::stage(stage, None, e))?;
    }
    write_jsonl(path, rows).map_err(|e| PipelineError::stage(stage, None, format!("{}: {e}", path.display())))
}

fn read_rows<T: serde::de::DeserializeOwned>(stage: &'static str, path: &Path) -> Res<Vec<T>> {
    read_jsonl(path).map_err(|e| PipelineError::data(stage, e))
}

fn load_config(arg: &ConfigArg) -> Res<Option<PipelineConfig>> {
    arg.config.as_deref().map(PipelineConfig::load).transpose()
}

/// A flag value, else the config value resolved against the config directory.
fn pick_path(flag: &Option<PathBuf>, cfg: Option<&PipelineConfig>, from: impl Fn(&PipelineConfig) -> Option<&PathBuf>) -> Option<PathBuf> {
    flag.clone()
        .or_else(|| cfg.and_then(|c| from(c).map(|p| c.resolve(p))))
}

fn census(stage: &'static str, names: &NameArgs, cfg: Option<&PipelineConfig>) -> Res<Option<GenderNameTable>> {
    let male = pick_path(&names.census_male, cfg, |c| Some(&c.names.census_male));
    let female = pick_path(&names.census_female, cfg, |c| Some(&c.names.census_female));
    match (male, female) {
        (Some(m), Some(f)) => load_census(&m, &f).map(Some).map_err(|e| PipelineError::data(stage, e)),
        (None, None) => Ok(None),
        _ => Err(PipelineError::Config("--census-male and --census-female go together".into())),
    }
}

fn load_documents(path: &Path) -> Res<Vec<AnnotatedDocument>> {
    if path.extension().is_some_and(|e| e == "jsonl") {
        read_rows("ingest", path)
    } else {
        read_conll_corpus(path).map_err(|e| PipelineError::data("ingest", e))
    }
}

fn load_text(source: &TextSource) -> Res<Vec<TextDocument>> {
    if let Some(n) = source.synthetic {
        let cfg = TopicCorpusConfig {
            documents: n,
            ..TopicCorpusConfig::default()
        };
        return Ok(topic_corpus(&cfg, source.corpus_seed));
    }
    let path = source.corpus.as_deref().expect("clap requires a source");
    let is_jsonl = path.extension().is_some_and(|e| e == "jsonl");
    if is_jsonl {
        read_rows("ingest", path)
    } else {
        Ok(load_documents(path)?.iter().map(TextDocument::from_annotated).collect())
    }
}

fn word_lists(stage: &'static str, flag: &Option<PathBuf>, cfg: Option<&PipelineConfig>) -> Res<IdentifierWordList> {
    match pick_path(flag, cfg, |c| c.word_lists.as_ref()) {
        Some(p) => IdentifierWordList::load(&p).map_err(|e| PipelineError::data(stage, e)),
        None => Ok(IdentifierWordList::helm_gender()),
    }
}

fn parse_intersection(s: &str) -> Res<Intersection> {
    let mut black = None;
    let mut white = None;
    for part in s.split(',') {
        let (group, gender) = part
            .split_once('=')
            .ok_or_else(|| PipelineError::Config(format!("bad intersection entry `{part}`")))?;
        let g = Gender::parse(gender.trim()).ok_or_else(|| PipelineError::Config(format!("unknown gender `{gender}`")))?;
        match group.trim() {
            "black" => black = Some(g),
            "white" => white = Some(g),
            other => return Err(PipelineError::Config(format!("unknown group `{other}`"))),
        }
    }
    match (black, white) {
        (Some(black), Some(white)) => Ok(Intersection { black, white }),
        _ => Err(PipelineError::Config("intersection needs both black and white".into())),
    }
}

fn generate(a: &GenerateArgs) -> Res<()> {
    let cfg = load_config(&a.cfg)?;
    let cfg = cfg.as_ref();
    let mut scheme = match (&a.scheme, cfg) {
        (Some(s), _) => {
            let kind = SchemeKind::parse(s).ok_or_else(|| PipelineError::Config(format!("unknown scheme `{s}`")))?;
            AssignmentScheme::new(kind)
        }
        (None, Some(c)) => c.scheme.clone(),
        (None, None) => return Err(PipelineError::Config("--scheme is required without --config".into())),
    };
    if let Some(s) = &a.intersection {
        scheme.intersection = Some(parse_intersection(s)?);
    }
    if let Some(v) = a.variants {
        scheme.variants_per_original = v;
    }
    scheme.alter_last_names |= a.alter_last_names;
    scheme.weighted_names |= a.weighted_names;
    scheme.validate().map_err(|e| PipelineError::Config(e.to_string()))?;
    let seed = a
        .seed
        .or(cfg.map(|c| c.seed))
        .ok_or_else(|| PipelineError::Config("--seed is required".into()))?;
    let census = census("generate", &a.names, cfg)?
        .ok_or_else(|| PipelineError::Config("census name lists are required".into()))?;
    let race = match pick_path(&a.race_names, cfg, |c| c.names.race.as_ref()) {
        Some(p) => Some(RaceNameTable::load(&p).map_err(|e| PipelineError::data("generate", e))?),
        None => None,
    };
    let mut templates: Vec<DocumentTemplate> = read_rows("generate", &a.templates)?;
    if let Some(p) = &a.content_words {
        let content: Vec<ContentWordAnnotation> = read_rows("templates", p)?;
        for t in &mut templates {
            t.attach_content_words(&content)
                .map_err(|e| PipelineError::stage("templates", Some(t.id.clone()), e))?;
        }
    }
    let inventory = NameInventory::new(&census, race);
    let g = generate_corpus(&templates, &scheme, &inventory, seed).map_err(|e| PipelineError::stage("generate", None, e))?;
    write_rows("generate", &a.out, &g.inputs)?;
    if let Some(p) = &a.dropped {
        write_rows("generate", p, &g.dropped)?;
    }
    eprintln!("{} inputs, {} originals dropped", g.inputs.len(), g.dropped.len());
    Ok(())
}

fn summary_records(stage: &'static str, a: &SummaryArgs, cfg: Option<&PipelineConfig>) -> Res<(Vec<GeneratedInput>, Vec<SummaryRecord>)> {
    let inputs: Vec<GeneratedInput> = read_rows(stage, &a.inputs)?;
    let census = census(stage, &a.names, cfg)?.map(|c| c.resolve_ambiguous());
    let lexicon = Lexicon::from_inputs(&inputs, census.as_ref());
    let rows: Vec<SummaryRow> = read_rows(stage, &a.summaries)?;
    let mut records = join_summaries(rows, &inputs, &lexicon).map_err(|e| PipelineError::stage(stage, None, e))?;
    if let Some(p) = pick_path(&a.ner, cfg, |c| c.ner_side_file.as_ref()) {
        let ner: Vec<NerSideRow> = read_rows(stage, &p)?;
        apply_ner_side_file(&mut records, &ner).map_err(|e| PipelineError::stage(stage, None, e))?;
    }
    records.sort_by(|a, b| (&a.system, &a.input_id).cmp(&(&b.system, &b.input_id)));
    Ok((inputs, records))
}

fn align_cmd(a: &AlignArgs) -> Res<()> {
    let cfg = load_config(&a.cfg)?;
    let (inputs, records) = summary_records("align", &a.summaries, cfg.as_ref())?;
    let alignment = align_corpus(&records, &inputs);
    write_rows("align", &a.out, &alignment.rows)?;
    println!("{}", serde_json::to_string_pretty(&alignment.counts).expect("counts serialize"));
    Ok(())
}

fn classify_cmd(a: &ClassifyArgs) -> Res<()> {
    let cfg = load_config(&a.cfg)?;
    let cfg = cfg.as_ref();
    let rows: Vec<AlignmentRow> = read_rows("classify", &a.alignments)?;
    let cache = match pick_path(&a.cache, cfg, |c| c.encyclopedia_cache.as_ref()) {
        Some(p) => FixtureCache::load(&p).map_err(|e| PipelineError::data("classify", e))?,
        None => FixtureCache::default(),
    };
    let census = census("classify", &a.names, cfg)?
        .ok_or_else(|| PipelineError::Config("census name lists are required".into()))?
        .resolve_ambiguous();
    let (out, warnings) = classify_rows(&rows, &CachedClient::new(cache), &census);
    for w in warnings {
        eprintln!("warning: {w}");
    }
    write_rows("classify", &a.out, &out)
}

fn score_cmd(a: &ScoreArgs) -> Res<()> {
    let cfg = load_config(&a.cfg)?;
    let cfg = cfg.as_ref();
    let (inputs, records) = summary_records("score", &a.summaries, cfg)?;
    let mut alignment = align_corpus(&records, &inputs);
    let hallucinations: Vec<HallucinationRow> = match &a.hallucinations {
        Some(p) => read_rows("score", p)?,
        None => Vec::new(),
    };
    count_gendered_hallucinations(&mut alignment, &hallucinations);
    let lists = word_lists("score", &a.word_lists, cfg)?;
    let mut dense = BTreeMap::new();
    for spec in &a.dense {
        let (system, path) = spec
            .split_once('=')
            .ok_or_else(|| PipelineError::Config(format!("--dense expects system=path, got `{spec}`")))?;
        let d = load_dense_vectors(Path::new(path)).map_err(|e| PipelineError::stage("score", Some(system.into()), e))?;
        dense.insert(system.to_string(), d);
    }
    let params = ScoreParams {
        seed: a
            .seed
            .or(cfg.map(|c| c.seed))
            .ok_or_else(|| PipelineError::Config("--seed is required".into()))?,
        replicates: a
            .replicates
            .or(cfg.map(|c| c.replicates))
            .unwrap_or(sumbias::measures::DEFAULT_REPLICATES),
        smoothing: a
            .smoothing
            .or(cfg.map(|c| c.smoothing))
            .unwrap_or(sumbias::measures::DEFAULT_SMOOTHING),
    };
    if params.replicates < 2 {
        return Err(PipelineError::Config("replicates must be at least 2".into()));
    }
    let systems: Vec<String> = sumbias::summary::systems(&records).into_keys().collect();
    let data = ScoreInputs {
        records: &records,
        inputs: &inputs,
        alignment: &alignment,
        hallucinations: &hallucinations,
        lists: &lists,
        dense: &dense,
    };
    let (scores, _) = score_all(&systems, &data, &params);
    write_out("score", &a.out, &(serde_json::to_string_pretty(&scores).expect("scores serialize") + "\n"))
}

fn analyze(source: &TextSource, lists: &Option<PathBuf>, top: usize, out: &Path) -> Res<()> {
    let docs = load_text(source)?;
    let lists = word_lists("analyze", lists, None)?;
    let split = split_by_identifier_majority(&docs, &lists);
    let pairs = lists.gender_pairs();
    let result = fightin_words(&docs, &split, "female", "male", &pairs);
    let topics = TopicLists::default();
    let mut topic_counts: BTreeMap<String, usize> = BTreeMap::new();
    for d in &docs {
        let label = serde_json::to_value(classify_topic(d, &topics)).expect("label serializes");
        *topic_counts.entry(label.as_str().unwrap_or_default().to_string()).or_default() += 1;
    }
    let mut csv = String::from("direction,rank,token,z\n");
    for (toward_a, name) in [(true, &result.group_a), (false, &result.group_b)] {
        for (i, (tok, z)) in result.top(toward_a, top).into_iter().enumerate() {
            csv.push_str(&format!("{name},{},{tok},{:.4}\n", i + 1, if toward_a { z } else { -z }));
        }
    }
    let json = serde_json::json!({
        "documents": docs.len(),
        "split": split.iter().map(|(g, ix)| (g.clone(), ix.len())).collect::<BTreeMap<_, _>>(),
        "topics": topic_counts,
        "fightin_words": result,
    });
    write_out("analyze", &out.join("fightin_words.csv"), &csv)?;
    write_out("analyze", &out.join("input_bias.json"), &(serde_json::to_string_pretty(&json).expect("json") + "\n"))
}

fn simulate(source: &TextSource, seed: u64, lists: &Option<PathBuf>, out: &Path) -> Res<()> {
    let docs = load_text(source)?;
    let lists = word_lists("simulate", lists, None)?;
    let result =
        simulation_experiment(&docs, &lists, &TopicLists::default(), seed).map_err(|e| PipelineError::stage("simulate", None, e))?;
    let opt = |x: Option<f64>| x.map(|v| format!("{v:.4}")).unwrap_or_default();
    let mut csv = String::from("algorithm,uniform,adjusted\n");
    for r in &result.rows {
        csv.push_str(&format!("{},{},{}\n", r.algorithm.as_str(), opt(r.uniform), opt(r.adjusted)));
    }
    write_out("simulate", &out.join("simulation.csv"), &csv)?;
    write_out(
        "simulate",
        &out.join("simulation.json"),
        &(serde_json::to_string_pretty(&result).expect("json") + "\n"),
    )
}

fn report_cmd(from: &Option<PathBuf>, scores: &Option<PathBuf>, halluc: &Option<PathBuf>, format: &str, out: &Path) -> Res<()> {
    let format = ReportFormat::parse(format).ok_or_else(|| PipelineError::Config(format!("unknown format `{format}`")))?;
    let report = match (from, scores) {
        (Some(p), _) => {
            let text = fs::read_to_string(p).map_err(|e| PipelineError::data("report", format!("{}: {e}", p.display())))?;
            serde_json::from_str::<BiasReport>(&text).map_err(|e| data("report")(e.to_string()))?
        }
        (None, Some(p)) => {
            let text = fs::read_to_string(p).map_err(|e| PipelineError::data("report", format!("{}: {e}", p.display())))?;
            let scores: Vec<ScoreRow> = serde_json::from_str(&text).map_err(|e| data("report")(e.to_string()))?;
            let rows: Vec<HallucinationRow> = match halluc {
                Some(h) => read_rows("report", h)?,
                None => Vec::new(),
            };
            let systems: std::collections::BTreeSet<&str> = scores.iter().map(|s| s.system.as_str()).collect();
            let systems = systems
                .into_iter()
                .map(|s| SystemReport {
                    system: s.to_string(),
                    alignment: Default::default(),
                    hallucinations: top_hallucinations(&rows, s, 10),
                })
                .collect();
            BiasReport {
                scores,
                systems,
                ..Default::default()
            }
        }
        (None, None) => unreachable!("clap requires a source"),
    };
    write_out("report", out, &render_report(&report, format))
}

fn run_cmd(config: &Path, seed: Option<u64>, output_dir: Option<PathBuf>, replicates: Option<usize>) -> Res<()> {
    let mut c = PipelineConfig::load(config)?;
    if let Some(s) = seed {
        c.seed = s;
    }
    if let Some(d) = output_dir {
        c.output_dir = std::env::current_dir().map(|cwd| cwd.join(d)).map_err(|e| PipelineError::Config(e.to_string()))?;
    }
    if let Some(r) = replicates {
        if r < 2 {
            return Err(PipelineError::Config("replicates must be at least 2".into()));
        }
        c.replicates = r;
    }
    let out = run_pipeline(&c)?;
    eprintln!(
        "{} inputs, {} score rows; report in {}",
        out.report.inputs,
        out.report.scores.len(),
        c.resolve(&c.output_dir).display()
    );
    Ok(())
}

fn dispatch(cli: Cli) -> Res<()> {
    match cli.command {
        Command::Ingest { corpus, out } => {
            let docs = read_conll_corpus(&corpus).map_err(|e| PipelineError::data("ingest", e))?;
            for d in &docs {
                for diag in validate_document(d) {
                    eprintln!("{}: {diag}", d.key());
                }
            }
            write_rows("ingest", &out, &docs)
        }
        Command::BuildTemplates { docs, content_words, out } => {
            let docs = load_documents(&docs)?;
            let content: Vec<ContentWordAnnotation> = match &content_words {
                Some(p) => read_rows("templates", p)?,
                None => Vec::new(),
            };
            let templates = build_templates(&docs, &content)?;
            write_rows("templates", &out, &templates)
        }
        Command::Generate(a) => generate(&a),
        Command::Align(a) => align_cmd(&a),
        Command::ClassifyHallucinations(a) => classify_cmd(&a),
        Command::Score(a) => score_cmd(&a),
        Command::AnalyzeInputBias {
            source,
            word_lists,
            top,
            out,
        } => analyze(&source, &word_lists, top, &out),
        Command::SimulateBaselines {
            source,
            seed,
            word_lists,
            out,
        } => simulate(&source, seed, &word_lists, &out),
        Command::Report {
            from,
            scores,
            hallucinations,
            format,
            out,
        } => report_cmd(&from, &scores, &hallucinations, &format, &out),
        Command::Run {
            config,
            seed,
            output_dir,
            replicates,
        } => run_cmd(&config, seed, output_dir, replicates),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let usage = e.use_stderr();
            let _ = e.print();
            return ExitCode::from(if usage { 1 } else { 0 });
        }
    };
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
    }
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
