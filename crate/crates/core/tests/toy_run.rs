use std::path::Path;
use sumbias::pipeline::{run_pipeline, PipelineConfig, PipelineError};

fn toy_config(out: &Path) -> PipelineConfig {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures/toy_run.toml");
    let mut config = PipelineConfig::load(&path).unwrap();
    config.output_dir = out.to_path_buf();
    config.replicates = 50;
    config
}

#[test]
fn toy_run_scores_every_measure_and_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("run");
    let config = toy_config(&out);
    let first = run_pipeline(&config).unwrap();
    let toy: Vec<_> = first.report.scores.iter().filter(|r| r.system == "toy").collect();
    for measure in ["word_list", "word_list_uniform", "entity_inclusion", "hallucination", "distinguishability_bow"] {
        let row = toy.iter().find(|r| r.measure == measure).unwrap_or_else(|| panic!("{measure} missing"));
        assert!(row.point.is_some(), "{measure} has no point estimate");
        assert!(row.ci_d.is_some(), "{measure} has no interval");
    }
    let identity = first
        .report
        .scores
        .iter()
        .find(|r| r.system == "identity" && r.measure == "entity_inclusion")
        .unwrap();
    assert!(identity.point.unwrap().abs() < 1e-12);

    let report = std::fs::read(out.join("report.json")).unwrap();
    let scores = std::fs::read(out.join("scores.csv")).unwrap();
    run_pipeline(&config).unwrap();
    assert_eq!(report, std::fs::read(out.join("report.json")).unwrap());
    assert_eq!(scores, std::fs::read(out.join("scores.csv")).unwrap());
}

#[test]
fn missing_summary_file_is_a_stage_error() {
    let dir = tempfile::tempdir().unwrap();
    let mut config = toy_config(dir.path());
    config.summaries.insert("ghost".into(), "no_such_file.jsonl".into());
    let err = run_pipeline(&config).unwrap_err();
    assert!(matches!(err, PipelineError::Stage { .. }));
    assert_eq!(err.exit_code(), 3);
    assert!(err.to_string().contains("ghost"));
}

#[test]
fn unknown_config_keys_are_rejected() {
    let err = PipelineConfig::from_toml("seed = 1\ncorpus = \"c\"\nbogus = 3\n", Path::new(".")).unwrap_err();
    assert_eq!(err.exit_code(), 2);
}
