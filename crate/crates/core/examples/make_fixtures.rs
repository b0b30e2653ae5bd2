//! Regenerates the shipped toy corpus, its content-word annotations and the
//! toy summaries used by `toy_run.toml`.
//!
//! ```text
//! cargo run -p sumbias-core --example make_fixtures -- crates/core/fixtures
//! ```

use rand::Rng;
use std::path::PathBuf;
use sumbias::ingest::write_conll;
use sumbias::jsonl::write_jsonl;
use sumbias::names::{load_census, RaceNameTable};
use sumbias::perturb::{generate_corpus, NameInventory};
use sumbias::pipeline::{build_templates, PipelineConfig};
use sumbias::seed::derive_rng;
use sumbias::summary::{detect_entities, tokenize_summary, Lexicon, NerSideRow, SummaryRow};
use sumbias::synthetic::fixture_corpus;

const DOCUMENTS: usize = 50;
const SEED: u64 = 20240611;

/// Names planted into toy summaries, skewed towards men. "Pat Nixon" is not
/// detectable from the lexicon and reaches the pipeline through the NER side file.
const PLANTED: &[&str] = &[
    "Boris Yeltsin",
    "Boris Yeltsin",
    "John Smith",
    "Jordan Peterson",
    "James Carter",
    "Robert Kline",
    "Robert Kline",
    "Pat Nixon",
    "Mary Quinn",
    "Chelsea Manning",
];

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let dir = std::env::args().nth(1).map(PathBuf::from).unwrap_or_else(|| PathBuf::from("fixtures"));
    std::fs::create_dir_all(&dir)?;
    let corpus = fixture_corpus(DOCUMENTS, SEED);
    std::fs::write(dir.join("toy_corpus.conll"), write_conll(&corpus.documents))?;
    write_jsonl(&dir.join("content_words.jsonl"), &corpus.content_words)?;

    let config = PipelineConfig::load(&dir.join("toy_run.toml"))?;
    let templates = build_templates(&corpus.documents, &corpus.content_words)?;
    let census = load_census(
        &config.resolve(&config.names.census_male),
        &config.resolve(&config.names.census_female),
    )?;
    let race = config
        .names
        .race
        .as_ref()
        .map(|p| RaceNameTable::load(&config.resolve(p)))
        .transpose()?;
    let inputs = generate_corpus(&templates, &config.scheme, &NameInventory::new(&census, race), config.seed)?.inputs;

    let lexicon = Lexicon::from_inputs(&inputs, Some(&census.resolve_ambiguous()));
    let mut rows = Vec::new();
    let mut ner = Vec::new();
    for input in &inputs {
        let mut rng = derive_rng(SEED, &["toy-summary", &input.id]);
        let mut parts: Vec<String> = input.sentence_tokens().iter().take(3).map(|s| s.join(" ")).collect();
        let planted = rng.gen_bool(0.3).then(|| PLANTED[rng.gen_range(0..PLANTED.len())]);
        if let Some(name) = planted {
            parts.push(format!("Later {name} commented ."));
        }
        let summary = parts.join(" ");
        if planted == Some("Pat Nixon") {
            let tokens = tokenize_summary(&summary);
            let mut entities: Vec<(usize, usize, String)> = detect_entities(&tokens, &lexicon)
                .into_iter()
                .map(|e| (e.start, e.end, "PERSON".to_string()))
                .collect();
            let at = tokens.iter().rposition(|t| t == "Pat").expect("planted name is present");
            entities.push((at, at + 1, "PERSON".to_string()));
            ner.push(NerSideRow {
                input_id: input.id.clone(),
                system: Some("toy".into()),
                entities,
            });
        }
        rows.push(SummaryRow {
            input_id: input.id.clone(),
            system: "toy".into(),
            summary,
        });
    }
    write_jsonl(&dir.join("toy_summaries.jsonl"), &rows)?;
    write_jsonl(&dir.join("toy_ner.jsonl"), &ner)?;
    println!(
        "wrote {} documents, {} content-word annotations, {} summaries and {} side-file rows to {}",
        corpus.documents.len(),
        corpus.content_words.len(),
        rows.len(),
        ner.len(),
        dir.display()
    );
    Ok(())
}
