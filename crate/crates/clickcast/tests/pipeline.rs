//! Stage caching and failure reporting of the full workflow.

use clickcast::config::RunConfig;
use clickcast::core::forecaster::TsfConfig;
use clickcast::pipeline::{run_pipeline, DATA, MANIFEST, METRICS, TABLE};
use clickcast::Error;

fn small() -> RunConfig {
    let mut c = RunConfig::default();
    c.generator.num_campaigns = 3;
    c.generator.days_per_campaign = 40;
    c.tsf = TsfConfig {
        hidden: 8,
        ff_hidden: 8,
        layers: 1,
        heads: 2,
        epochs: 1,
        embed_dim: 16,
        mlp_hidden: vec![8],
        ..TsfConfig::default()
    };
    c.embedder.dim = 16;
    c.eval.test_campaigns = 1;
    c.eval.seeds = vec![0];
    c.grpo.grpo.iterations = 2;
    c.grpo.num_prompts = 4;
    c
}

#[test]
fn second_run_is_fully_cached() {
    let dir = tempfile::tempdir().unwrap();
    let first = run_pipeline(&small(), Some(dir.path())).unwrap();
    assert!(first.cached.is_empty(), "{:?}", first.cached);
    let metrics = std::fs::read(dir.path().join(METRICS)).unwrap();
    let again = run_pipeline(&small(), Some(dir.path())).unwrap();
    assert!(again.executed.is_empty(), "{:?}", again.executed);
    assert_eq!(again.cached, first.executed);
    assert_eq!(again.manifest, first.manifest);
    assert_eq!(std::fs::read(dir.path().join(METRICS)).unwrap(), metrics);
    assert!(dir.path().join(TABLE).exists() && dir.path().join(MANIFEST).exists());
}

#[test]
fn alpha_change_reruns_only_training_and_evaluation() {
    let dir = tempfile::tempdir().unwrap();
    run_pipeline(&small(), Some(dir.path())).unwrap();
    let mut changed = small();
    changed.tsf.alpha = 0.25;
    let report = run_pipeline(&changed, Some(dir.path())).unwrap();
    assert_eq!(report.executed, vec!["train", "evaluate"]);
    for stage in ["generate", "prompts", "summarize", "score", "grpo"] {
        assert!(report.cached.contains(&stage), "{stage} not cached");
    }
}

#[test]
fn removed_artifact_forces_its_stage_to_rerun() {
    let dir = tempfile::tempdir().unwrap();
    run_pipeline(&small(), Some(dir.path())).unwrap();
    std::fs::remove_file(dir.path().join(METRICS)).unwrap();
    let report = run_pipeline(&small(), Some(dir.path())).unwrap();
    assert_eq!(report.executed, vec!["evaluate"]);
    assert!(dir.path().join(METRICS).exists());
}

#[test]
fn corrupt_data_names_the_ingest_stage() {
    let dir = tempfile::tempdir().unwrap();
    run_pipeline(&small(), Some(dir.path())).unwrap();
    // Truncating the dataset without touching its sidecar leaves the
    // generate stage cached but makes the next reader fail.
    std::fs::write(dir.path().join(DATA), "{not json\n").unwrap();
    let mut changed = small();
    changed.prompt.number_format = 2;
    match run_pipeline(&changed, Some(dir.path())) {
        Err(Error::Stage { stage, .. }) => assert_eq!(stage, "ingest"),
        other => panic!("expected an ingest failure, got {other:?}"),
    }
}
