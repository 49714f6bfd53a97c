//! Grid search with stratified k-fold cross-validation. Oversampling, when
//! configured, only ever sees the training folds.

use std::fmt;
use std::str::FromStr;

use indexmap::IndexMap;
use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::data::DesignMatrix;
use crate::error::{Error, Result};
use crate::metrics::{auc, confusion_counts, roc_curve, score_set};
use crate::models::{fit_model, format_params, labels_at, predict_proba, Hyperparams, ModelKind, ParamValue};
use crate::resample::{smote_with_origins, SmoteConfig};
use crate::rng::{child_rng, derive_seed};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scoring {
    #[default]
    Auc,
    Accuracy,
    Precision,
    Recall,
    F1,
}

impl Scoring {
    pub fn as_str(self) -> &'static str {
        match self {
            Scoring::Auc => "auc",
            Scoring::Accuracy => "accuracy",
            Scoring::Precision => "precision",
            Scoring::Recall => "recall",
            Scoring::F1 => "f1",
        }
    }

    /// Score of `scores` against `y`; `None` when the metric is undefined.
    pub fn evaluate(self, y: &[u8], scores: &[f64]) -> Result<Option<f64>> {
        if self == Scoring::Auc {
            return Ok(roc_curve(y, scores).ok().map(|c| auc(&c)));
        }
        let report = score_set(&confusion_counts(y, &labels_at(scores, 0.5)?)?)?;
        Ok(match self {
            Scoring::Accuracy => report.accuracy,
            Scoring::Precision => report.precision,
            Scoring::Recall => report.recall,
            Scoring::F1 => report.f1,
            Scoring::Auc => unreachable!(),
        })
    }
}

impl fmt::Display for Scoring {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Scoring {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "auc" | "roc_auc" => Ok(Scoring::Auc),
            "accuracy" => Ok(Scoring::Accuracy),
            "precision" => Ok(Scoring::Precision),
            "recall" => Ok(Scoring::Recall),
            "f1" => Ok(Scoring::F1),
            other => Err(Error::Config(format!("unknown scoring '{other}' (auc, accuracy, precision, recall, f1)"))),
        }
    }
}

/// Fold index per row. Rows of each class are shuffled and dealt round-robin,
/// the second class continuing where the first stopped, so fold sizes and
/// per-fold class counts each differ by at most one.
pub fn stratified_kfold(labels: &[u8], k: usize, seed: u64) -> Result<Vec<usize>> {
    if k < 2 {
        return Err(Error::Config(format!("need at least 2 folds, got {k}")));
    }
    let mut folds = vec![0; labels.len()];
    let mut next = 0;
    for class in [0u8, 1] {
        let mut rows: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == class).collect();
        if rows.len() < k {
            return Err(Error::Data(format!("class {class} has {} rows, fewer than {k} folds", rows.len())));
        }
        rows.shuffle(&mut child_rng(seed, &[u64::from(class)]));
        for i in rows {
            folds[i] = next % k;
            next += 1;
        }
    }
    Ok(folds)
}

/// Candidate values per hyperparameter for one model kind.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    pub kind: ModelKind,
    pub params: IndexMap<String, Vec<ParamValue>>,
}

impl Grid {
    pub fn new(kind: ModelKind, params: IndexMap<String, Vec<ParamValue>>) -> Result<Self> {
        let grid = Grid { kind, params };
        grid.validate()?;
        Ok(grid)
    }

    /// Grid holding exactly the given point.
    pub fn single(kind: ModelKind, params: &Hyperparams) -> Self {
        Grid { kind, params: params.iter().map(|(k, v)| (k.clone(), vec![v.clone()])).collect() }
    }

    pub fn size(&self) -> usize {
        self.params.values().map(Vec::len).product()
    }

    pub fn validate(&self) -> Result<()> {
        if let Some((k, _)) = self.params.iter().find(|(_, v)| v.is_empty()) {
            return Err(Error::Config(format!("{} grid: '{k}' has no candidate values", self.kind)));
        }
        for combo in self.combinations() {
            self.kind.validate(&combo)?;
        }
        Ok(())
    }

    /// Cartesian product in row-major order: the last key varies fastest.
    pub fn combinations(&self) -> Vec<Hyperparams> {
        let mut out = vec![Hyperparams::new()];
        for (key, values) in &self.params {
            out = out
                .into_iter()
                .flat_map(|base| {
                    values.iter().map(move |v| {
                        let mut next = base.clone();
                        next.insert(key.clone(), v.clone());
                        next
                    })
                })
                .collect();
        }
        out
    }
}

/// Row bookkeeping of one fold, in indices of the tuning matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldAudit {
    pub fold: usize,
    pub training_rows: Vec<usize>,
    pub validation_rows: Vec<usize>,
    /// Every row used as a seed or neighbor by in-fold oversampling.
    pub smote_parent_rows: Vec<usize>,
    pub synthetic_rows: usize,
}

impl FoldAudit {
    /// True when no validation row was fitted on or oversampled from.
    pub fn is_clean(&self) -> bool {
        let mut seen = vec![false; self.max_row() + 1];
        for &i in &self.validation_rows {
            seen[i] = true;
        }
        !self.training_rows.iter().chain(&self.smote_parent_rows).any(|&i| seen[i])
    }

    fn max_row(&self) -> usize {
        self.training_rows.iter().chain(&self.validation_rows).chain(&self.smote_parent_rows).copied().max().unwrap_or(0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvRow {
    pub params: Hyperparams,
    /// One score per fold; failed fits and undefined metrics are `-inf`
    /// (stored as `null` in JSON).
    #[serde(with = "neg_inf_vec")]
    pub fold_scores: Vec<f64>,
    #[serde(with = "neg_inf")]
    pub mean_score: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TuneResult {
    pub kind: ModelKind,
    pub best_params: Hyperparams,
    #[serde(with = "neg_inf")]
    pub best_score: f64,
    pub cv_table: Vec<CvRow>,
    pub scoring: Scoring,
    pub folds: usize,
    pub seed: u64,
    pub smote: Option<SmoteConfig>,
    #[serde(skip)]
    pub audit: Vec<FoldAudit>,
}

impl TuneResult {
    /// The `Best Parameters` line for this model.
    pub fn best_line(&self) -> String {
        format!("{}: {}", self.kind.display_name(), format_params(&self.best_params))
    }
}

struct PreparedFold {
    train: DesignMatrix,
    validation: DesignMatrix,
    audit: FoldAudit,
}

fn prepare_folds(train: &DesignMatrix, k: usize, smote: Option<&SmoteConfig>, seed: u64) -> Result<Vec<PreparedFold>> {
    let assignment = stratified_kfold(train.labels(), k, seed)?;
    let mut out = Vec::with_capacity(k);
    for fold in 0..k {
        let training_rows: Vec<usize> = (0..train.n_rows()).filter(|&i| assignment[i] != fold).collect();
        let validation_rows: Vec<usize> = (0..train.n_rows()).filter(|&i| assignment[i] == fold).collect();
        let fold_train = train.select_rows(&training_rows);
        let (fold_train, parents) = match smote {
            Some(cfg) => {
                let cfg = SmoteConfig { seed: derive_seed(cfg.seed, &[fold as u64]), ..*cfg };
                let r = smote_with_origins(&fold_train, &cfg)?;
                let mut parents: Vec<usize> = r
                    .origins
                    .iter()
                    .flat_map(|o| [training_rows[o.seed_row], training_rows[o.neighbor_row]])
                    .collect();
                parents.sort_unstable();
                parents.dedup();
                (r.matrix, (parents, r.origins.len()))
            }
            None => (fold_train, (Vec::new(), 0)),
        };
        out.push(PreparedFold {
            train: fold_train,
            validation: train.select_rows(&validation_rows),
            audit: FoldAudit {
                fold,
                training_rows,
                validation_rows,
                smote_parent_rows: parents.0,
                synthetic_rows: parents.1,
            },
        });
    }
    Ok(out)
}

/// Exhaustive search over `grid`: every combination is fitted on each set of
/// k−1 training folds (oversampled if `smote` is set) and scored on the held
/// out fold. The best mean score wins, ties going to the earliest combination.
pub fn grid_search(
    grid: &Grid,
    train: &DesignMatrix,
    k: usize,
    scoring: Scoring,
    smote: Option<&SmoteConfig>,
    seed: u64,
) -> Result<TuneResult> {
    grid.validate()?;
    let (neg, pos) = train.class_counts();
    if neg == 0 || pos == 0 {
        return Err(Error::Data("grid search needs both classes in the training data".into()));
    }
    let folds = prepare_folds(train, k, smote, seed)?;
    let mut cv_table = Vec::with_capacity(grid.size());
    for (cell, params) in grid.combinations().into_iter().enumerate() {
        let mut fold_scores = Vec::with_capacity(k);
        let mut error = None;
        for f in &folds {
            let fitted = fit_model(grid.kind, &params, &f.train, derive_seed(seed, &[f.audit.fold as u64]))
                .and_then(|m| predict_proba(&m, &f.validation))
                .and_then(|s| scoring.evaluate(f.validation.labels(), &s));
            let score = match fitted {
                Ok(Some(s)) => s,
                Ok(None) => f64::NEG_INFINITY,
                Err(e) => {
                    log::warn!("{} cell {cell} fold {}: {e}", grid.kind, f.audit.fold);
                    error.get_or_insert_with(|| e.to_string());
                    f64::NEG_INFINITY
                }
            };
            fold_scores.push(score);
        }
        let mean_score = fold_scores.iter().sum::<f64>() / k as f64;
        log::debug!("{} {} -> {mean_score:.4}", grid.kind, format_params(&params));
        cv_table.push(CvRow { params, fold_scores, mean_score, error });
    }
    let mut best = 0;
    for (i, row) in cv_table.iter().enumerate() {
        if row.mean_score > cv_table[best].mean_score {
            best = i;
        }
    }
    if cv_table[best].mean_score == f64::NEG_INFINITY {
        return Err(Error::Model(format!(
            "every {} grid combination failed: {}",
            grid.kind,
            cv_table[best].error.as_deref().unwrap_or("undefined scores")
        )));
    }
    Ok(TuneResult {
        kind: grid.kind,
        best_params: cv_table[best].params.clone(),
        best_score: cv_table[best].mean_score,
        cv_table,
        scoring,
        folds: k,
        seed,
        smote: smote.copied(),
        audit: folds.into_iter().map(|f| f.audit).collect(),
    })
}

mod neg_inf {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if v.is_finite() {
            s.serialize_f64(*v)
        } else {
            s.serialize_none()
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        Ok(Option::<f64>::deserialize(d)?.unwrap_or(f64::NEG_INFINITY))
    }
}

mod neg_inf_vec {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &[f64], s: S) -> Result<S::Ok, S::Error> {
        s.collect_seq(v.iter().map(|x| x.is_finite().then_some(*x)))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<f64>, D::Error> {
        Ok(Vec::<Option<f64>>::deserialize(d)?.into_iter().map(|x| x.unwrap_or(f64::NEG_INFINITY)).collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::hyperparams;

    #[test]
    fn balanced_folds_get_one_of_each() {
        let labels = [1, 1, 1, 1, 1, 0, 0, 0, 0, 0];
        let folds = stratified_kfold(&labels, 5, 3).unwrap();
        for f in 0..5 {
            let pos = (0..10).filter(|&i| folds[i] == f && labels[i] == 1).count();
            let neg = (0..10).filter(|&i| folds[i] == f && labels[i] == 0).count();
            assert_eq!((pos, neg), (1, 1));
        }
        assert_eq!(folds, stratified_kfold(&labels, 5, 3).unwrap());
    }

    #[test]
    fn imbalanced_folds_are_proportional() {
        let labels: Vec<u8> = (0..100).map(|i| u8::from(i < 12)).collect();
        let folds = stratified_kfold(&labels, 5, 9).unwrap();
        let sizes: Vec<usize> = (0..5).map(|f| folds.iter().filter(|&&x| x == f).count()).collect();
        assert!(sizes.iter().all(|&s| s == 20));
        for f in 0..5 {
            let pos = (0..100).filter(|&i| folds[i] == f && labels[i] == 1).count();
            assert!((2..=3).contains(&pos));
        }
    }

    #[test]
    fn too_few_rows_per_class() {
        let labels = [1, 1, 0, 0, 0, 0];
        assert!(stratified_kfold(&labels, 3, 0).is_err());
        assert!(stratified_kfold(&labels, 1, 0).is_err());
    }

    #[test]
    fn row_major_order() {
        let mut params = IndexMap::new();
        params.insert("criterion".to_string(), vec!["gini".into(), "entropy".into()]);
        params.insert("max_depth".to_string(), vec![ParamValue::from(1i64), 2i64.into(), 3i64.into()]);
        let grid = Grid::new(ModelKind::Tree, params).unwrap();
        let combos = grid.combinations();
        assert_eq!(combos.len(), 6);
        assert_eq!(combos[1], hyperparams([("criterion", ParamValue::from("gini")), ("max_depth", 2i64.into())]));
        assert_eq!(combos[3]["criterion"], ParamValue::from("entropy"));
    }

    #[test]
    fn unknown_key_and_empty_list_rejected() {
        let mut params = IndexMap::new();
        params.insert("depth".to_string(), vec![ParamValue::from(1i64)]);
        assert!(Grid::new(ModelKind::Tree, params).is_err());
        let mut params = IndexMap::new();
        params.insert("max_depth".to_string(), vec![]);
        assert!(Grid::new(ModelKind::Tree, params).is_err());
    }

    #[test]
    fn scoring_names_round_trip() {
        for s in [Scoring::Auc, Scoring::Accuracy, Scoring::Precision, Scoring::Recall, Scoring::F1] {
            assert_eq!(s.as_str().parse::<Scoring>().unwrap(), s);
        }
        assert!("mcc".parse::<Scoring>().is_err());
    }

    #[test]
    fn undefined_scores_map_to_none() {
        assert_eq!(Scoring::Auc.evaluate(&[1, 1], &[0.2, 0.9]).unwrap(), None);
        assert_eq!(Scoring::Precision.evaluate(&[1, 0], &[0.2, 0.1]).unwrap(), None);
    }
}
