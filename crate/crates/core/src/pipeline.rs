//! End-to-end run: ingest → split → encode → select → per model
//! (tune → refit → score) → explain, writing every artifact and a manifest.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};

use crate::config::{DataSource, RunConfig};
use crate::data::{load_csv, stratified_split, synth_generate, published_effects, Dataset, DesignMatrix, Encoder};
use crate::error::{Error, Result};
use crate::explain::{background_sample, explain_rows, global_importance, local_summary, write_global_csv, write_local_csv};
use crate::metrics::{evaluate, fmt_score, MetricsReport};
use crate::models::{fit_model, format_params, predict_proba, FittedModel, ModelKind};
use crate::report::{emit_report, write_comparison_csv, write_comparison_markdown, ComparisonRow};
use crate::resample::smote;
use crate::rng::derive_seed;
use crate::select::{fit_logit_wald, select_significant, write_selection_csv, LogitOptions};
use crate::tuning::{grid_search, TuneResult};

/// How far a run goes. Later stages include all earlier ones.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Stage {
    Ingest,
    Select,
    Tune,
    Train,
    Evaluate,
    Explain,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageTiming {
    pub stage: String,
    pub seconds: f64,
}

/// One read of the held-out partition.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestAccess {
    pub model: ModelKind,
    /// Tuning for this model had finished when the read happened.
    pub after_tuning: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub config_hash: String,
    pub seeds: IndexMap<String, u64>,
    pub models: Vec<ModelKind>,
    pub status: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub failed_stage: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    pub completed_stages: Vec<String>,
    pub test_access_log: Vec<TestAccess>,
    pub artifacts: Vec<String>,
    pub timings: Vec<StageTiming>,
}

#[derive(Debug, Clone)]
pub struct RunSummary {
    pub output_dir: PathBuf,
    pub manifest: Manifest,
    pub comparison: Vec<ComparisonRow>,
    pub tuning: Vec<TuneResult>,
    pub selected_columns: Vec<String>,
}

/// Held-out rows, handed out once per model and logged.
struct GuardedTest {
    matrix: DesignMatrix,
    log: Vec<TestAccess>,
}

impl GuardedTest {
    fn read(&mut self, model: ModelKind, after_tuning: bool) -> Result<&DesignMatrix> {
        if self.log.iter().any(|a| a.model == model) {
            return Err(Error::Model(format!("test partition already read for `{model}`")));
        }
        self.log.push(TestAccess { model, after_tuning });
        Ok(&self.matrix)
    }
}

struct Run<'a> {
    config: &'a RunConfig,
    dir: PathBuf,
    manifest: Manifest,
}

impl Run<'_> {
    fn path(&mut self, name: &str) -> PathBuf {
        if !self.manifest.artifacts.iter().any(|a| a == name) {
            self.manifest.artifacts.push(name.to_string());
        }
        self.dir.join(name)
    }

    fn write_json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<()> {
        let path = self.path(name);
        let mut text = serde_json::to_string_pretty(value)?;
        text.push('\n');
        fs::write(path, text)?;
        Ok(())
    }

    fn stage<T>(&mut self, name: &str, f: impl FnOnce(&mut Self) -> Result<T>) -> Result<T> {
        log::info!("stage {name}");
        let start = Instant::now();
        match f(self) {
            Ok(v) => {
                self.manifest.completed_stages.push(name.to_string());
                self.manifest.timings.push(StageTiming { stage: name.to_string(), seconds: start.elapsed().as_secs_f64() });
                Ok(v)
            }
            Err(e) => {
                self.manifest.status = "failed".into();
                self.manifest.failed_stage = Some(name.to_string());
                self.manifest.error = Some(e.to_string());
                self.save_manifest()?;
                Err(Error::Stage { stage: name.to_string(), source: Box::new(e) })
            }
        }
    }

    fn save_manifest(&mut self) -> Result<()> {
        let manifest = self.manifest.clone();
        self.write_json("manifest.json", &manifest)
    }
}

fn seeds(config: &RunConfig) -> IndexMap<String, u64> {
    let mut s = IndexMap::new();
    if let DataSource::Synth(spec) = &config.data {
        s.insert("synth".to_string(), spec.seed);
    }
    s.insert("split".to_string(), config.split.seed);
    if let Some(sm) = &config.smote {
        s.insert("smote".to_string(), sm.seed);
    }
    s.insert("tuning".to_string(), config.seed);
    s.insert("explain".to_string(), config.explain.seed);
    s
}

/// Loads or generates the records named by the configuration.
pub fn ingest(config: &RunConfig) -> Result<(Dataset, usize)> {
    let schema = config.schema()?;
    match &config.data {
        DataSource::Synth(spec) => {
            let effects = spec.effects.clone().unwrap_or_else(published_effects);
            Ok((synth_generate(&schema, spec.rows, spec.serious_share, &effects, spec.seed)?, 0))
        }
        DataSource::Csv(path) => {
            let report = load_csv(path, &schema)?;
            Ok((report.dataset, report.dropped_rows))
        }
    }
}

/// Runs the whole pipeline.
pub fn run_pipeline(config: &RunConfig) -> Result<RunSummary> {
    run_until(config, Stage::Explain)
}

/// Runs the pipeline through `last`, writing artifacts under
/// `config.output_dir`.
pub fn run_until(config: &RunConfig, last: Stage) -> Result<RunSummary> {
    config.validate()?;
    let dir = config.output_dir.clone();
    fs::create_dir_all(dir.join("models"))?;
    let mut run = Run {
        config,
        dir: dir.clone(),
        manifest: Manifest {
            config_hash: config.hash(),
            seeds: seeds(config),
            models: config.models.clone(),
            status: "running".into(),
            failed_stage: None,
            error: None,
            completed_stages: Vec::new(),
            test_access_log: Vec::new(),
            artifacts: Vec::new(),
            timings: Vec::new(),
        },
    };
    run.write_json("config.json", config)?;

    let (dataset, dropped) = run.stage("ingest", |r| {
        let (ds, dropped) = ingest(r.config)?;
        let (neg, pos) = (ds.labels().iter().filter(|&&l| l == 0).count(), ds.labels().iter().filter(|&&l| l == 1).count());
        if matches!(r.config.data, DataSource::Synth(_)) {
            let p = r.path("data.csv");
            ds.write_csv(&p)?;
        }
        r.write_json(
            "ingest_report.json",
            &serde_json::json!({ "rows": ds.len(), "dropped_rows": dropped, "negatives": neg, "positives": pos }),
        )?;
        Ok((ds, dropped))
    })?;
    log::info!("{} rows ingested, {dropped} dropped", dataset.len());

    let (train, test, selected, fit_summary) = run.stage("split_encode_select", |r| {
        let split = stratified_split(&dataset, r.config.split.test_fraction, r.config.split.seed)?;
        r.write_json(
            "split.json",
            &serde_json::json!({
                "seed": split.seed,
                "test_fraction": split.test_fraction,
                "train_indices": split.train_indices,
                "test_indices": split.test_indices,
            }),
        )?;
        let encoder = Encoder::fit(&split.train)?;
        for w in &encoder.warnings {
            log::warn!("{w}");
        }
        r.write_json("encoder.json", &encoder)?;
        let train = encoder.transform(&split.train)?;
        let test = encoder.transform(&split.test)?;
        let fit = fit_logit_wald(&train, &LogitOptions::default())?;
        let report = select_significant(&fit, r.config.selection_alpha)?;
        let p = r.path("selection_report.csv");
        write_selection_csv(&fit, &report, &p)?;
        r.write_json("selection.json", &report)?;
        if report.kept.is_empty() {
            return Err(Error::Model(format!("no column is significant at alpha = {}", r.config.selection_alpha)));
        }
        Ok((train.select_columns(&report.kept)?, test.select_columns(&report.kept)?, report.kept, fit))
    })?;
    log::info!("{} of {} columns selected", selected.len(), fit_summary.column_names.len());

    let mut summary = RunSummary {
        output_dir: dir.clone(),
        manifest: run.manifest.clone(),
        comparison: Vec::new(),
        tuning: Vec::new(),
        selected_columns: selected,
    };
    if last == Stage::Select || last == Stage::Ingest {
        return finish(run, summary);
    }

    let mut guarded = GuardedTest { matrix: test, log: Vec::new() };
    let smote_cfg = config.smote;
    let refit_train = match &smote_cfg {
        Some(cfg) => smote(&train, cfg)?,
        None => train.clone(),
    };
    let mut fitted: IndexMap<ModelKind, FittedModel> = IndexMap::new();
    for &kind in &config.models {
        let tuned = run.stage(&format!("tune:{kind}"), |r| {
            let grid = r.config.grid(kind)?;
            let result = grid_search(&grid, &train, r.config.cv_folds, r.config.scoring, smote_cfg.as_ref(), r.config.seed)?;
            log::info!("{}", result.best_line());
            r.write_json(&format!("tune_{kind}.json"), &result)?;
            Ok(result)
        })?;
        if last >= Stage::Train {
            let model = run.stage(&format!("train:{kind}"), |r| {
                let m = fit_model(kind, &tuned.best_params, &refit_train, derive_seed(r.config.seed, &[u64::MAX]))?;
                let p = r.path(&format!("models/{kind}.json"));
                m.save_json(&p)?;
                Ok(m)
            })?;
            if last >= Stage::Evaluate {
                let row = run.stage(&format!("evaluate:{kind}"), |r| {
                    let test = guarded.read(kind, true)?;
                    let scores = predict_proba(&model, test)?;
                    let (metrics, roc) = evaluate(test.labels(), &scores, r.config.threshold)?;
                    let p = r.path(&format!("roc_{kind}.csv"));
                    roc.write_csv(&p)?;
                    r.write_json(&format!("metrics_{kind}.json"), &metrics)?;
                    Ok(comparison_row(kind, &metrics, &tuned))
                })?;
                log::info!("{kind}: recall {} auc {}", fmt_score(row.recall), fmt_score(row.auc));
                summary.comparison.push(row);
            }
            fitted.insert(kind, model);
        }
        summary.tuning.push(tuned);
    }
    run.manifest.test_access_log = guarded.log.clone();
    if last >= Stage::Evaluate {
        let rows = summary.comparison.clone();
        run.stage("comparison", |r| {
            let p = r.path("comparison_table.csv");
            write_comparison_csv(&rows, &p)?;
            let p = r.path("comparison_table.md");
            write_comparison_markdown(&rows, &p)
        })?;
    }

    if last >= Stage::Explain {
        if let Some(kind) = config.explain.model {
            let model = &fitted[&kind];
            run.stage("explain", |r| {
                let cfg = r.config.explain;
                let background = background_sample(&train, cfg.background_size, derive_seed(cfg.seed, &[0]))?;
                let rows = background_sample(&train, cfg.max_rows, derive_seed(cfg.seed, &[1]))?;
                let shap = explain_rows(model, &rows, &background)?;
                let global = global_importance(&shap)?;
                let p = r.path("shap_global.csv");
                write_global_csv(&global, &p)?;
                let p = r.path("shap_local.csv");
                write_local_csv(&local_summary(&shap, &rows)?, &p)?;
                r.write_json(
                    "shap_meta.json",
                    &serde_json::json!({
                        "model": kind,
                        "base_value": shap.base_value,
                        "output": if shap.is_margin { "margin" } else { "probability" },
                        "explained_rows": rows.n_rows(),
                        "background_rows": background.n_rows(),
                    }),
                )?;
                Ok(())
            })?;
        }
        run.stage("report", |r| {
            let text = emit_report(&r.dir)?;
            let p = r.path("report.md");
            fs::write(p, text)?;
            Ok(())
        })?;
    }
    finish(run, summary)
}

fn finish(mut run: Run<'_>, mut summary: RunSummary) -> Result<RunSummary> {
    run.manifest.status = "complete".into();
    run.path("manifest.json");
    run.save_manifest()?;
    summary.manifest = run.manifest;
    Ok(summary)
}

fn comparison_row(kind: ModelKind, m: &MetricsReport, tuned: &TuneResult) -> ComparisonRow {
    ComparisonRow {
        model: kind,
        accuracy: m.accuracy,
        precision: m.precision,
        recall: m.recall,
        f1: m.f1,
        auc: m.auc,
        best_params: format_params(&tuned.best_params),
    }
}

/// Loads a manifest written by a run.
pub fn load_manifest(dir: &Path) -> Result<Manifest> {
    let path = dir.join("manifest.json");
    if !path.exists() {
        return Err(Error::MissingFile(path));
    }
    Ok(serde_json::from_str(&fs::read_to_string(path)?)?)
}
