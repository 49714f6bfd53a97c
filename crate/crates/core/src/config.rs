//! Run configuration: one JSON document describing data, preprocessing,
//! models, tuning and explanation settings.

use std::path::{Path, PathBuf};

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::data::{EffectTable, FeatureSchema};
use crate::error::{Error, Result};
use crate::models::{ModelKind, ParamValue};
use crate::resample::SmoteConfig;
use crate::tuning::{Grid, Scoring};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum DataSource {
    /// Records generated from the schema with planted effects.
    Synth(SynthSpec),
    /// Records read from a CSV file whose header names the schema's columns.
    Csv(PathBuf),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SynthSpec {
    pub rows: usize,
    /// Share of serious injuries.
    #[serde(default = "default_serious_share")]
    pub serious_share: f64,
    #[serde(default = "default_seed")]
    pub seed: u64,
    /// Planted log-odds effects; the selection-table effects when omitted.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub effects: Option<EffectTable>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SplitConfig {
    pub test_fraction: f64,
    pub seed: u64,
}

impl Default for SplitConfig {
    fn default() -> Self {
        Self { test_fraction: 0.2, seed: default_seed() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExplainConfig {
    /// Model to explain; `null` skips explanation.
    pub model: Option<ModelKind>,
    pub background_size: usize,
    /// Training rows explained (a seeded sample when the split is larger).
    pub max_rows: usize,
    pub seed: u64,
}

impl Default for ExplainConfig {
    fn default() -> Self {
        Self { model: Some(ModelKind::Gbt), background_size: 100, max_rows: 1000, seed: default_seed() }
    }
}

pub type GridSpec = IndexMap<String, Vec<ParamValue>>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub data: DataSource,
    /// Schema JSON; the built-in crash schema when omitted.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub schema: Option<PathBuf>,
    #[serde(default)]
    pub split: SplitConfig,
    /// Oversampling inside tuning folds and before the final refit; `null` disables it.
    #[serde(default = "default_smote")]
    pub smote: Option<SmoteConfig>,
    #[serde(default = "default_alpha")]
    pub selection_alpha: f64,
    #[serde(default = "default_models")]
    pub models: Vec<ModelKind>,
    /// Per-model grids; models without an entry use [`default_grid`].
    #[serde(default)]
    pub grids: IndexMap<ModelKind, GridSpec>,
    #[serde(default = "default_folds")]
    pub cv_folds: usize,
    #[serde(default)]
    pub scoring: Scoring,
    /// Seed for fold assignment and model fitting.
    #[serde(default = "default_seed")]
    pub seed: u64,
    /// Probability cut-off for hard labels.
    #[serde(default = "default_threshold")]
    pub threshold: f64,
    #[serde(default)]
    pub explain: ExplainConfig,
    #[serde(default = "default_output")]
    pub output_dir: PathBuf,
}

fn default_seed() -> u64 {
    42
}
fn default_serious_share() -> f64 {
    0.12
}
fn default_smote() -> Option<SmoteConfig> {
    Some(SmoteConfig::default())
}
fn default_alpha() -> f64 {
    0.10
}
fn default_models() -> Vec<ModelKind> {
    ModelKind::ALL.to_vec()
}
fn default_folds() -> usize {
    5
}
fn default_threshold() -> f64 {
    0.5
}
fn default_output() -> PathBuf {
    PathBuf::from("runs/latest")
}

fn values<T: Into<ParamValue> + Clone>(v: &[T]) -> Vec<ParamValue> {
    v.iter().cloned().map(Into::into).collect()
}

/// Default search space per model; each contains the published best setting.
pub fn default_grid(kind: ModelKind) -> GridSpec {
    let mut g = GridSpec::new();
    match kind {
        ModelKind::Logistic => {
            g.insert("C".into(), values(&[0.0015, 0.01, 0.1, 1.0]));
            g.insert("penalty".into(), values(&["l2"]));
            g.insert("solver".into(), values(&["newton-cg"]));
        }
        ModelKind::Tree => {
            g.insert("criterion".into(), values(&["gini", "entropy"]));
            g.insert("max_depth".into(), values(&[5i64, 10, 23]));
            g.insert("min_samples_leaf".into(), values(&[1i64, 5]));
        }
        ModelKind::Forest => {
            g.insert("criterion".into(), values(&["gini", "entropy"]));
            g.insert("max_depth".into(), values(&[10i64, 19]));
            g.insert("max_features".into(), values(&["sqrt"]));
            g.insert("n_estimators".into(), values(&[50i64]));
        }
        ModelKind::Svm => {
            g.insert("C".into(), values(&[1i64, 9]));
            g.insert("gamma".into(), values(&["auto", "scale"]));
            g.insert("kernel".into(), values(&["rbf"]));
        }
        ModelKind::Adaboost => {
            g.insert("algorithm".into(), values(&["SAMME.R"]));
            g.insert("learning_rate".into(), values(&[0.5, 0.8500000000000001, 1.0]));
            g.insert("n_estimators".into(), values(&[25i64, 50]));
        }
        ModelKind::Gbt => {
            g.insert("gamma".into(), values(&[0i64, 1]));
            g.insert("learning_rate".into(), values(&[0.3, 0.75]));
            g.insert("max_depth".into(), values(&[6i64, 13]));
            g.insert("n_estimators".into(), values(&[25i64]));
        }
    }
    g
}

impl RunConfig {
    /// Defaults around a synthetic data set of `rows` records.
    pub fn synthetic(rows: usize) -> Self {
        serde_json::from_value(serde_json::json!({ "data": { "synth": { "rows": rows } } }))
            .expect("defaults deserialize")
    }

    pub fn from_json_file(path: &Path) -> Result<Self> {
        if !path.exists() {
            return Err(Error::MissingFile(path.to_path_buf()));
        }
        let text = std::fs::read_to_string(path)?;
        let config: Self =
            serde_json::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        config.validate()?;
        Ok(config)
    }

    /// Sets every seed in the configuration to `seed`.
    pub fn reseed(&mut self, seed: u64) {
        self.seed = seed;
        self.split.seed = seed;
        self.explain.seed = seed;
        if let Some(s) = &mut self.smote {
            s.seed = seed;
        }
        if let DataSource::Synth(s) = &mut self.data {
            s.seed = seed;
        }
    }

    pub fn grid(&self, kind: ModelKind) -> Result<Grid> {
        Grid::new(kind, self.grids.get(&kind).cloned().unwrap_or_else(|| default_grid(kind)))
    }

    pub fn schema(&self) -> Result<FeatureSchema> {
        match &self.schema {
            Some(path) => FeatureSchema::from_json_file(path),
            None => Ok(FeatureSchema::crash_severity_with_vehicle_year()),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Config(msg));
        if !(self.split.test_fraction > 0.0 && self.split.test_fraction < 1.0) {
            return bad(format!("split.test_fraction {} outside (0, 1)", self.split.test_fraction));
        }
        if !(self.selection_alpha > 0.0 && self.selection_alpha <= 1.0) {
            return bad(format!("selection_alpha {} outside (0, 1]", self.selection_alpha));
        }
        if self.cv_folds < 2 {
            return bad(format!("cv_folds must be at least 2, got {}", self.cv_folds));
        }
        if !(0.0..=1.0).contains(&self.threshold) {
            return bad(format!("threshold {} outside [0, 1]", self.threshold));
        }
        if self.models.is_empty() {
            return bad("no models configured".into());
        }
        for (i, m) in self.models.iter().enumerate() {
            if self.models[..i].contains(m) {
                return bad(format!("model `{m}` listed twice"));
            }
        }
        for kind in self.grids.keys() {
            if !self.models.contains(kind) {
                log::warn!("grid for `{kind}` ignored: model not configured");
            }
        }
        for &kind in &self.models {
            self.grid(kind)?;
        }
        if let Some(s) = &self.smote {
            if s.k_neighbors == 0 || !(s.target_ratio > 0.0 && s.target_ratio <= 1.0) {
                return bad(format!("smote needs k_neighbors >= 1 and target_ratio in (0, 1], got {s:?}"));
            }
        }
        if let Some(m) = self.explain.model {
            if !self.models.contains(&m) {
                return bad(format!("explain.model `{m}` is not among the configured models"));
            }
        }
        if self.explain.background_size == 0 || self.explain.max_rows == 0 {
            return bad("explain.background_size and explain.max_rows must be positive".into());
        }
        if let DataSource::Synth(s) = &self.data {
            if s.rows == 0 || !(s.serious_share > 0.0 && s.serious_share < 1.0) {
                return bad(format!("synth needs rows >= 1 and serious_share in (0, 1), got {s:?}"));
            }
        }
        Ok(())
    }

    /// SHA-256 of the canonical JSON form.
    pub fn hash(&self) -> String {
        let json = serde_json::to_vec(self).expect("config serializes");
        Sha256::digest(&json).iter().map(|b| format!("{b:02x}")).collect()
    }
}
