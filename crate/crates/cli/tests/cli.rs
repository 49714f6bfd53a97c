use std::path::Path;
use std::process::{Command, Output};

fn severity(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_severity")).args(args).output().expect("binary runs")
}

fn write_config(dir: &Path, body: serde_json::Value) -> String {
    let path = dir.join("config.json");
    std::fs::write(&path, serde_json::to_string_pretty(&body).unwrap()).unwrap();
    path.display().to_string()
}

fn small(dir: &Path) -> serde_json::Value {
    serde_json::json!({
        "data": { "synth": { "rows": 700 } },
        "models": ["tree", "adaboost"],
        "cv_folds": 3,
        "explain": { "model": "adaboost", "background_size": 20, "max_rows": 40, "seed": 1 },
        "output_dir": dir.join("out"),
    })
}

#[test]
fn run_then_report() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), small(dir.path()));
    let out = severity(&["--config", &cfg, "run"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("Adaptive Boosting (Adaboost)"));
    assert!(text.contains("Top features by mean |SHAP|"));
    let report = severity(&["--config", &cfg, "report"]);
    assert!(report.status.success());
    assert_eq!(String::from_utf8(report.stdout).unwrap(), text);
}

#[test]
fn stage_subcommands() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), small(dir.path()));
    let out_dir = dir.path().join("out");

    let synth = severity(&["--config", &cfg, "synth", "--rows", "300"]);
    assert!(synth.status.success());
    assert!(String::from_utf8_lossy(&synth.stdout).contains("wrote 300 rows"));

    let ingest = severity(&["--config", &cfg, "ingest"]);
    assert!(String::from_utf8_lossy(&ingest.stdout).contains("700 rows"));

    let select = severity(&["--config", &cfg, "select"]);
    assert!(select.status.success());
    assert!(out_dir.join("selection_report.csv").exists());

    let tune = severity(&["--config", &cfg, "--models", "tree", "--scoring", "recall", "tune"]);
    assert!(tune.status.success(), "{}", String::from_utf8_lossy(&tune.stderr));
    assert!(String::from_utf8_lossy(&tune.stdout).contains("Decision Tree: {"));

    let train = severity(&["--config", &cfg, "--no-smote", "train"]);
    assert!(train.status.success());
    assert!(out_dir.join("models/adaboost.json").exists());

    let eval = severity(&["--config", &cfg, "--seed", "9", "evaluate"]);
    assert!(eval.status.success());
    assert!(String::from_utf8_lossy(&eval.stdout).contains("<- best"));
    assert!(out_dir.join("comparison_table.csv").exists());

    let explain = severity(&["--config", &cfg, "explain"]);
    assert!(explain.status.success());
    assert!(out_dir.join("shap_local.csv").exists());
}

#[test]
fn out_flag_overrides_the_config() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), small(dir.path()));
    let other = dir.path().join("elsewhere");
    let out = severity(&["--config", &cfg, "--out", other.to_str().unwrap(), "select"]);
    assert!(out.status.success());
    assert!(other.join("manifest.json").exists());
}

#[test]
fn config_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let mut body = small(dir.path());
    body["cv_folds"] = 1.into();
    let cfg = write_config(dir.path(), body);
    assert_eq!(severity(&["--config", &cfg, "run"]).status.code(), Some(2));
    let cfg = write_config(dir.path(), small(dir.path()));
    assert_eq!(severity(&["--config", &cfg, "--models", "knn", "run"]).status.code(), Some(2));
    assert_eq!(severity(&["--config", &cfg, "--scoring", "mcc", "run"]).status.code(), Some(2));
    assert_eq!(severity(&["bogus"]).status.code(), Some(2));
}

#[test]
fn data_errors_exit_3() {
    let dir = tempfile::tempdir().unwrap();
    let mut body = small(dir.path());
    body["data"] = serde_json::json!({ "csv": dir.path().join("missing.csv") });
    let cfg = write_config(dir.path(), body);
    let out = severity(&["--config", &cfg, "run"]);
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("ingest"));
    assert_eq!(severity(&["--out", dir.path().join("nothing").to_str().unwrap(), "report"]).status.code(), Some(3));
    assert_eq!(severity(&["--config", dir.path().join("nope.json").to_str().unwrap(), "run"]).status.code(), Some(3));
}

#[test]
fn modeling_failures_exit_4() {
    let dir = tempfile::tempdir().unwrap();
    let mut body = small(dir.path());
    body["models"] = serde_json::json!(["logistic"]);
    body["explain"]["model"] = serde_json::Value::Null;
    body["grids"] = serde_json::json!({ "logistic": { "C": [1000.0], "max_iter": [1] } });
    let cfg = write_config(dir.path(), body);
    let out = severity(&["--config", &cfg, "run"]);
    assert_eq!(out.status.code(), Some(4), "{}", String::from_utf8_lossy(&out.stderr));
    let manifest: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("out/manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["failed_stage"], "tune:logistic");
}
