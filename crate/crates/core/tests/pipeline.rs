use std::fs;
use std::path::Path;

use severity_core::config::DataSource;
use severity_core::pipeline::load_manifest;
use severity_core::report::read_comparison_csv;
use severity_core::{run_pipeline, run_until, Error, ErrorCategory, ModelKind, RunConfig, Stage};

fn small(dir: &Path, models: &[ModelKind]) -> RunConfig {
    let mut c = RunConfig::synthetic(900);
    c.models = models.to_vec();
    c.explain.model = models.iter().copied().find(|m| m.is_tree_based());
    c.explain.max_rows = 60;
    c.explain.background_size = 30;
    c.cv_folds = 3;
    c.output_dir = dir.to_path_buf();
    c
}

#[test]
fn single_model_run_writes_one_row() {
    let dir = tempfile::tempdir().unwrap();
    let summary = run_pipeline(&small(dir.path(), &[ModelKind::Logistic])).unwrap();
    assert_eq!(summary.comparison.len(), 1);
    let rows = read_comparison_csv(&dir.path().join("comparison_table.csv")).unwrap();
    assert_eq!(rows.len(), 1);
    assert_eq!(rows[0].model, ModelKind::Logistic);
    let report = fs::read_to_string(dir.path().join("report.md")).unwrap();
    assert!(report.contains("Logistic Regression **(best)**"));
    assert!(report.contains("No explanation artifacts"));
    let manifest = load_manifest(dir.path()).unwrap();
    assert_eq!(manifest.status, "complete");
    assert_eq!(manifest.test_access_log.len(), 1);
}

#[test]
fn rows_follow_configured_order_and_test_is_read_once_per_model() {
    let dir = tempfile::tempdir().unwrap();
    let models = [ModelKind::Gbt, ModelKind::Tree, ModelKind::Adaboost];
    let summary = run_pipeline(&small(dir.path(), &models)).unwrap();
    let order: Vec<ModelKind> = summary.comparison.iter().map(|r| r.model).collect();
    assert_eq!(order, models);
    let log = &summary.manifest.test_access_log;
    assert_eq!(log.iter().map(|a| a.model).collect::<Vec<_>>(), models);
    assert!(log.iter().all(|a| a.after_tuning));
    let ada = &summary.comparison[2];
    assert!(ada.recall.is_some() && ada.auc.is_some());
    for name in ["shap_global.csv", "shap_local.csv", "selection_report.csv", "tune_gbt.json", "models/tree.json", "roc_adaboost.csv"] {
        assert!(dir.path().join(name).exists(), "{name} missing");
        assert!(summary.manifest.artifacts.iter().any(|a| a == name));
    }
    // every selected column survives into the saved models
    let model = severity_core::FittedModel::load_json(&dir.path().join("models/gbt.json")).unwrap();
    assert_eq!(model.column_names, summary.selected_columns);
}

fn snapshot(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut out = Vec::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for e in fs::read_dir(&d).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                let name = p.strip_prefix(dir).unwrap().display().to_string();
                let mut bytes = fs::read(&p).unwrap();
                if name == "manifest.json" {
                    let mut v: serde_json::Value = serde_json::from_slice(&bytes).unwrap();
                    v.as_object_mut().unwrap().remove("timings");
                    bytes = serde_json::to_vec(&v).unwrap();
                }
                out.push((name, bytes));
            }
        }
    }
    out.sort();
    out
}

#[test]
fn repeat_runs_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("run");
    let config = small(&out, &[ModelKind::Forest, ModelKind::Gbt]);
    run_pipeline(&config).unwrap();
    let sa = snapshot(&out);
    fs::remove_dir_all(&out).unwrap();
    run_pipeline(&config).unwrap();
    let sb = snapshot(&out);
    assert_eq!(sa.iter().map(|x| &x.0).collect::<Vec<_>>(), sb.iter().map(|x| &x.0).collect::<Vec<_>>());
    for ((name, x), (_, y)) in sa.iter().zip(&sb) {
        assert!(x == y, "{name} differs");
    }
}

#[test]
fn partial_runs_stop_early() {
    let dir = tempfile::tempdir().unwrap();
    let s = run_until(&small(dir.path(), &[ModelKind::Tree]), Stage::Tune).unwrap();
    assert_eq!(s.tuning.len(), 1);
    assert!(dir.path().join("tune_tree.json").exists());
    assert!(!dir.path().join("models/tree.json").exists());
    assert!(s.manifest.test_access_log.is_empty());
}

#[test]
fn failing_stage_persists_the_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let mut c = small(dir.path(), &[ModelKind::Tree]);
    c.data = DataSource::Csv(dir.path().join("absent.csv"));
    let err = run_pipeline(&c).unwrap_err();
    assert!(matches!(&err, Error::Stage { stage, .. } if stage == "ingest"));
    assert_eq!(err.category(), ErrorCategory::Data);
    let m = load_manifest(dir.path()).unwrap();
    assert_eq!(m.status, "failed");
    assert_eq!(m.failed_stage.as_deref(), Some("ingest"));
    assert!(m.completed_stages.is_empty());
}
