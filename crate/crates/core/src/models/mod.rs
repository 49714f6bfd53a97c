//! The six classifier families behind one fit / score contract.

pub mod adaboost;
pub mod forest;
pub mod gbt;
pub mod logistic;
pub mod params;
pub mod svm;
pub mod tree;

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::data::DesignMatrix;
use crate::error::{Error, Result};
use crate::models::tree::{grow_tree, GrowParams, GrowTarget, Tree};

pub use adaboost::AdaBoostModel;
pub use forest::ForestModel;
pub use gbt::GbtModel;
pub use logistic::LogisticModel;
pub use params::{format_params, hyperparams, Hyperparams, ParamValue};
pub use svm::SvmModel;

/// Version stamped into serialized models.
pub const MODEL_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    Logistic,
    Tree,
    Forest,
    Svm,
    Adaboost,
    Gbt,
}

impl ModelKind {
    pub const ALL: [ModelKind; 6] =
        [ModelKind::Logistic, ModelKind::Tree, ModelKind::Forest, ModelKind::Svm, ModelKind::Adaboost, ModelKind::Gbt];

    pub fn as_str(self) -> &'static str {
        match self {
            ModelKind::Logistic => "logistic",
            ModelKind::Tree => "tree",
            ModelKind::Forest => "forest",
            ModelKind::Svm => "svm",
            ModelKind::Adaboost => "adaboost",
            ModelKind::Gbt => "gbt",
        }
    }

    /// Human-readable name used in reports.
    pub fn display_name(self) -> &'static str {
        match self {
            ModelKind::Logistic => "Logistic Regression",
            ModelKind::Tree => "Decision Tree",
            ModelKind::Forest => "Random Forest",
            ModelKind::Svm => "Support Vector Machine",
            ModelKind::Adaboost => "Adaptive Boosting (Adaboost)",
            ModelKind::Gbt => "Extreme Gradient Boosting (XGBoost)",
        }
    }

    pub fn is_tree_based(self) -> bool {
        matches!(self, ModelKind::Tree | ModelKind::Forest | ModelKind::Adaboost | ModelKind::Gbt)
    }

    /// The tuned settings reported for each family.
    pub fn published_params(self) -> Hyperparams {
        match self {
            ModelKind::Logistic => {
                hyperparams([("C", ParamValue::from(0.0015)), ("penalty", "l2".into()), ("solver", "newton-cg".into())])
            }
            ModelKind::Tree => hyperparams([
                ("criterion", ParamValue::from("entropy")),
                ("max_depth", 23i64.into()),
                ("min_samples_leaf", 1i64.into()),
            ]),
            ModelKind::Forest => hyperparams([
                ("criterion", ParamValue::from("gini")),
                ("max_depth", 19i64.into()),
                ("max_features", "sqrt".into()),
                ("n_estimators", 50i64.into()),
            ]),
            ModelKind::Svm => {
                hyperparams([("C", ParamValue::from(9i64)), ("gamma", "auto".into()), ("kernel", "rbf".into())])
            }
            ModelKind::Adaboost => hyperparams([
                ("algorithm", ParamValue::from("SAMME.R")),
                ("learning_rate", 0.8500000000000001.into()),
                ("n_estimators", 25i64.into()),
            ]),
            ModelKind::Gbt => hyperparams([
                ("gamma", ParamValue::from(1i64)),
                ("learning_rate", 0.75.into()),
                ("max_depth", 13i64.into()),
                ("n_estimators", 25i64.into()),
            ]),
        }
    }

    /// Checks that `params` is a valid setting for this kind.
    pub fn validate(self, params: &Hyperparams) -> Result<()> {
        match self {
            ModelKind::Logistic => params::LogisticParams::from_map(params).map(drop),
            ModelKind::Tree => params::TreeParams::from_map(params).map(drop),
            ModelKind::Forest => params::ForestParams::from_map(params).map(drop),
            ModelKind::Svm => params::SvmParams::from_map(params).map(drop),
            ModelKind::Adaboost => params::AdaBoostParams::from_map(params).map(drop),
            ModelKind::Gbt => params::GbtParams::from_map(params).map(drop),
        }
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ModelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "logistic" | "lr" | "logistic_regression" => Ok(ModelKind::Logistic),
            "tree" | "dt" | "decision_tree" => Ok(ModelKind::Tree),
            "forest" | "rf" | "random_forest" => Ok(ModelKind::Forest),
            "svm" => Ok(ModelKind::Svm),
            "adaboost" | "ada" => Ok(ModelKind::Adaboost),
            "gbt" | "xgboost" | "xgb" => Ok(ModelKind::Gbt),
            other => Err(Error::Config(format!("unknown model kind `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ModelBody {
    Logistic(LogisticModel),
    Tree { tree: Tree },
    Forest(ForestModel),
    Svm(SvmModel),
    Adaboost(AdaBoostModel),
    Gbt(GbtModel),
}

/// A trained classifier. Scores are class-1 (serious injury) probabilities.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FittedModel {
    pub format_version: u32,
    pub params: Hyperparams,
    pub column_names: Vec<String>,
    pub model: ModelBody,
}

/// Additive tree view of a tree-based model: the explained output is
/// `base + Σ scale_t · tree_t(x)`.
#[derive(Debug, Clone, Copy)]
pub struct TreeEnsembleView<'a> {
    pub trees: &'a [Tree],
    pub scale: f64,
    pub base: f64,
    /// Whether the explained output is a pre-sigmoid margin.
    pub is_margin: bool,
}

impl TreeEnsembleView<'_> {
    pub fn output(&self, row: &[f64]) -> f64 {
        self.base + self.scale * self.trees.iter().map(|t| t.predict(row)).sum::<f64>()
    }
}

impl FittedModel {
    pub fn kind(&self) -> ModelKind {
        match self.model {
            ModelBody::Logistic(_) => ModelKind::Logistic,
            ModelBody::Tree { .. } => ModelKind::Tree,
            ModelBody::Forest(_) => ModelKind::Forest,
            ModelBody::Svm(_) => ModelKind::Svm,
            ModelBody::Adaboost(_) => ModelKind::Adaboost,
            ModelBody::Gbt(_) => ModelKind::Gbt,
        }
    }

    /// Class-1 probability for one row, in `[0, 1]`.
    pub fn score_row(&self, row: &[f64]) -> f64 {
        let s = match &self.model {
            ModelBody::Logistic(m) => m.predict(row),
            ModelBody::Tree { tree } => tree.predict(row),
            ModelBody::Forest(m) => m.predict(row),
            ModelBody::Svm(m) => m.predict(row),
            ModelBody::Adaboost(m) => m.predict(row),
            ModelBody::Gbt(m) => m.predict(row),
        };
        s.clamp(0.0, 1.0)
    }

    pub fn tree_view(&self) -> Option<TreeEnsembleView<'_>> {
        match &self.model {
            ModelBody::Tree { tree } => {
                Some(TreeEnsembleView { trees: std::slice::from_ref(tree), scale: 1.0, base: 0.0, is_margin: false })
            }
            ModelBody::Forest(m) => Some(TreeEnsembleView {
                trees: &m.trees,
                scale: 1.0 / m.trees.len() as f64,
                base: 0.0,
                is_margin: false,
            }),
            ModelBody::Adaboost(m) => Some(TreeEnsembleView { trees: &m.stumps, scale: 1.0, base: 0.0, is_margin: true }),
            ModelBody::Gbt(m) => Some(TreeEnsembleView { trees: &m.trees, scale: 1.0, base: m.base_margin, is_margin: true }),
            ModelBody::Logistic(_) | ModelBody::Svm(_) => None,
        }
    }

    /// The quantity explanations decompose: the additive margin for boosted
    /// ensembles, the probability otherwise.
    pub fn explained_output(&self, row: &[f64]) -> f64 {
        match self.tree_view() {
            Some(view) => view.output(row),
            None => self.score_row(row),
        }
    }

    fn check_columns(&self, x: &DesignMatrix) -> Result<()> {
        if x.column_names() != self.column_names.as_slice() {
            return Err(Error::ColumnMismatch { expected: self.column_names.clone(), found: x.column_names().to_vec() });
        }
        Ok(())
    }

    pub fn save_json(&self, path: &Path) -> Result<()> {
        let f = std::io::BufWriter::new(std::fs::File::create(path)?);
        serde_json::to_writer(f, self)?;
        Ok(())
    }

    pub fn load_json(path: &Path) -> Result<Self> {
        if !path.exists() {
            return Err(Error::MissingFile(path.to_path_buf()));
        }
        let m: Self = serde_json::from_reader(std::io::BufReader::new(std::fs::File::open(path)?))?;
        if m.format_version != MODEL_FORMAT_VERSION {
            return Err(Error::Config(format!(
                "model format version {} is not supported (expected {MODEL_FORMAT_VERSION})",
                m.format_version
            )));
        }
        Ok(m)
    }
}

/// Trains a model of `kind` on `x`.
pub fn fit_model(kind: ModelKind, params: &Hyperparams, x: &DesignMatrix, seed: u64) -> Result<FittedModel> {
    let (neg, pos) = x.class_counts();
    if neg == 0 || pos == 0 {
        return Err(Error::Data("training data needs both classes".into()));
    }
    let model = match kind {
        ModelKind::Logistic => ModelBody::Logistic(logistic::fit_logistic(x, &params::LogisticParams::from_map(params)?)?),
        ModelKind::Tree => {
            let p = params::TreeParams::from_map(params)?;
            let weights = vec![1.0; x.n_rows()];
            let rows: Vec<usize> = (0..x.n_rows()).collect();
            let tree = grow_tree(
                x,
                &rows,
                GrowTarget::Classification { labels: x.labels(), weights: &weights, criterion: p.criterion },
                &GrowParams { max_depth: p.max_depth, min_samples_leaf: p.min_samples_leaf, max_features: None, seed },
            )?;
            ModelBody::Tree { tree }
        }
        ModelKind::Forest => ModelBody::Forest(forest::fit_forest(x, &params::ForestParams::from_map(params)?, seed)?),
        ModelKind::Svm => ModelBody::Svm(svm::fit_svm(x, &params::SvmParams::from_map(params)?)?),
        ModelKind::Adaboost => {
            ModelBody::Adaboost(adaboost::fit_adaboost(x, &params::AdaBoostParams::from_map(params)?, seed)?)
        }
        ModelKind::Gbt => ModelBody::Gbt(gbt::fit_gbt(x, &params::GbtParams::from_map(params)?, seed)?),
    };
    Ok(FittedModel {
        format_version: MODEL_FORMAT_VERSION,
        params: params.clone(),
        column_names: x.column_names().to_vec(),
        model,
    })
}

/// Class-1 probabilities for every row of `x`.
pub fn predict_proba(model: &FittedModel, x: &DesignMatrix) -> Result<Vec<f64>> {
    model.check_columns(x)?;
    Ok(x.rows().map(|r| model.score_row(r)).collect())
}

/// Hard labels: 1 iff score >= threshold.
pub fn labels_at(scores: &[f64], threshold: f64) -> Result<Vec<u8>> {
    if !(0.0..=1.0).contains(&threshold) {
        return Err(Error::Config(format!("threshold {threshold} outside [0, 1]")));
    }
    Ok(scores.iter().map(|&s| u8::from(s >= threshold)).collect())
}

pub fn predict_label(model: &FittedModel, x: &DesignMatrix, threshold: f64) -> Result<Vec<u8>> {
    if !(0.0..=1.0).contains(&threshold) {
        return Err(Error::Config(format!("threshold {threshold} outside [0, 1]")));
    }
    labels_at(&predict_proba(model, x)?, threshold)
}
