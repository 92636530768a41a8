//! End-to-end pipeline behaviour: stage dependencies, resume, artifacts.

use std::path::Path;

use kre_core::gateway::synthetic::synthetic_sample_set;
use kre_core::pipeline::{run_pipeline, ModelSpec, RunConfig, Stage, SyntheticSpec};

fn config(dir: &Path, n: usize) -> RunConfig {
    let dataset = dir.join("dataset.jsonl");
    if !dataset.exists() {
        synthetic_sample_set(n, 7).write_jsonl(&dataset).unwrap();
    }
    RunConfig {
        dataset,
        output_dir: dir.join("out"),
        seed: 7,
        selection_subset: 24,
        models: vec![ModelSpec {
            name: "styled-agent".into(),
            synthetic: Some(SyntheticSpec::default()),
            ..ModelSpec::default()
        }],
        ..RunConfig::default()
    }
}

fn ledger_conditions(path: &Path) -> Vec<String> {
    std::fs::read_to_string(path)
        .unwrap_or_default()
        .lines()
        .skip(1)
        .map(|l| {
            serde_json::from_str::<serde_json::Value>(l).unwrap()["condition"]
                .as_str()
                .unwrap()
                .to_string()
        })
        .collect()
}

#[test]
fn assess_then_robustness_reuses_the_stored_profile() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config(dir.path(), 40);
    let first = run_pipeline(&cfg, &[Stage::Assess]).unwrap();
    assert_eq!(first.backend_calls["styled-agent"], 40);
    let ledger = cfg.output_dir.join("styled-agent/ledger.jsonl");
    let memory_rows = ledger_conditions(&ledger)
        .iter()
        .filter(|c| c.starts_with("memory:"))
        .count();
    assert_eq!(memory_rows, 40);

    let second = run_pipeline(&cfg, &[Stage::Robustness]).unwrap();
    // The conflict pass issues new calls, but no assessment calls recur.
    assert_eq!(second.backend_calls["styled-agent"], 40);
    let after = ledger_conditions(&ledger);
    assert_eq!(
        after.iter().filter(|c| c.starts_with("memory:")).count(),
        40,
        "assessment rows must not grow"
    );
    assert_eq!(after.iter().filter(|c| c.starts_with("zs:")).count(), 40);
}

#[test]
fn rerunning_completed_stages_makes_no_model_calls() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config(dir.path(), 30);
    let stages = [Stage::Assess, Stage::Robustness, Stage::Dmss, Stage::Roleplay, Stage::Report];
    let first = run_pipeline(&cfg, &stages).unwrap();
    assert!(first.backend_calls["styled-agent"] > 0);
    let second = run_pipeline(&cfg, &stages).unwrap();
    assert_eq!(
        second.backend_calls["styled-agent"], 0,
        "re-run with unchanged inputs must be served from the ledger"
    );
    assert_eq!(second.ledger_hits["styled-agent"], first.backend_calls["styled-agent"]);
}

#[test]
fn dmss_without_robustness_is_a_dependency_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config(dir.path(), 10);
    run_pipeline(&cfg, &[Stage::Assess]).unwrap();
    let err = run_pipeline(&cfg, &[Stage::Dmss]).unwrap_err();
    assert!(
        matches!(err, kre_core::pipeline::PipelineError::StageDependency(_)),
        "{err}"
    );
}

#[test]
fn robustness_without_assessment_is_a_dependency_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config(dir.path(), 10);
    let err = run_pipeline(&cfg, &[Stage::Robustness]).unwrap_err();
    assert!(
        matches!(err, kre_core::pipeline::PipelineError::StageDependency(_)),
        "{err}"
    );
}

#[test]
fn full_pipeline_emits_all_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config(dir.path(), 32);
    let stages = [
        Stage::Assess,
        Stage::Select,
        Stage::Robustness,
        Stage::Fewshot,
        Stage::Dmss,
        Stage::Roleplay,
        Stage::Report,
    ];
    let summary = run_pipeline(&cfg, &stages).unwrap();
    assert_eq!(summary.stages.len(), 7);
    let model_dir = cfg.output_dir.join("styled-agent");
    for name in [
        "ledger.jsonl",
        "memory_profile.json",
        "selection.json",
        "zero_shot.json",
        "few_shot.json",
        "style.json",
        "intervention.json",
    ] {
        assert!(model_dir.join(name).exists(), "{name} missing");
    }
    for name in ["leaderboard.csv", "leaderboard.md", "report.json", "run_meta.json"] {
        assert!(cfg.output_dir.join(name).exists(), "{name} missing");
    }
    // Artifacts embed the run identity.
    let profile: serde_json::Value = serde_json::from_str(
        &std::fs::read_to_string(model_dir.join("memory_profile.json")).unwrap(),
    )
    .unwrap();
    assert_eq!(
        profile["meta"]["config_hash"].as_str().unwrap(),
        summary.config_hash
    );
    assert_eq!(profile["meta"]["seed"], 7);
    assert!(profile["meta"]["instructions"]["zero_shot"].is_string());
}

#[test]
fn changed_seed_invalidates_the_ledger() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = config(dir.path(), 10);
    run_pipeline(&cfg, &[Stage::Assess]).unwrap();
    cfg.seed = 8;
    let err = run_pipeline(&cfg, &[Stage::Assess]).unwrap_err();
    assert!(
        matches!(err, kre_core::pipeline::PipelineError::Engine(_)),
        "a config change must not silently reuse stale ledger rows: {err}"
    );
}

#[test]
fn build_stage_constructs_a_dataset_from_source_items() {
    let dir = tempfile::tempdir().unwrap();
    let source = dir.path().join("source.jsonl");
    let items = [
        serde_json::json!({
            "corpus": "SQuADv2",
            "task_kind": "MRC",
            "question": "What coats the antenna?",
            "golden_answer": "gold foil",
            "golden_context": "The antenna is coated in gold foil for thermal stability.",
        }),
        serde_json::json!({
            "corpus": "ECQA",
            "task_kind": "CR",
            "question": "Where do you keep a ruler?",
            "golden_answer": "drawer",
            "golden_context": "Rulers live in desk drawers.",
            "existing_distractors": ["garage", "orchard", "harbor", "cinema"],
        }),
    ];
    let text: String = items.iter().map(|i| format!("{i}\n")).collect();
    std::fs::write(&source, text).unwrap();
    let mut cfg = config(dir.path(), 4);
    cfg.source_items = Some(source);
    run_pipeline(&cfg, &[Stage::Build]).unwrap();
    let built = cfg.output_dir.join("dataset.jsonl");
    assert!(built.exists());
    assert!(cfg.output_dir.join("dataset.manifest.json").exists());
    let set =
        kre_core::sample::load_dataset(&built, kre_core::sample::DatasetFormat::KreJsonl).unwrap();
    assert_eq!(set.len(), 2);
    for s in set.iter() {
        s.validate().unwrap();
        assert!(!s
            .negative_context
            .to_lowercase()
            .contains(&s.golden_text().to_lowercase()) || s.task_kind == kre_core::sample::TaskKind::Cr);
    }
}

#[test]
fn replay_export_covers_every_ledger_row() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config(dir.path(), 12);
    run_pipeline(&cfg, &[Stage::Assess, Stage::Robustness]).unwrap();
    let out = dir.path().join("export.jsonl");
    let exported = kre_core::pipeline::replay_export(&cfg, &out).unwrap();
    assert_eq!(exported, 24);
    let cache = kre_core::gateway::replay::ReplayCache::open(&out).unwrap();
    assert_eq!(cache.len(), 24);
}
