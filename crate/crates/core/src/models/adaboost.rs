//! Real AdaBoost (SAMME.R, two classes) over depth-1 probability stumps.
//!
//! Each stump's leaves store its additive contribution to the margin,
//! `learning_rate * ln(p / (1 - p))` with `p` the leaf's weighted class-1
//! share clipped to `[1e-12, 1 - 1e-12]`. The class-1 probability is
//! `σ(Σ contributions)`.

use serde::{Deserialize, Serialize};

use crate::data::DesignMatrix;
use crate::error::Result;
use crate::models::params::AdaBoostParams;
use crate::models::tree::{grow_tree, Criterion, GrowParams, GrowTarget, Tree};
use crate::select::sigmoid;

pub const PROBABILITY_CLIP: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdaBoostModel {
    pub stumps: Vec<Tree>,
}

impl AdaBoostModel {
    pub fn margin(&self, row: &[f64]) -> f64 {
        self.stumps.iter().map(|s| s.predict(row)).sum()
    }

    pub fn predict(&self, row: &[f64]) -> f64 {
        sigmoid(self.margin(row))
    }
}

/// Per-round diagnostics.
#[derive(Debug, Clone, Default)]
pub struct BoostTrace {
    /// Weighted training error of each fitted stump.
    pub stump_errors: Vec<f64>,
    /// Sum of sample weights after each update.
    pub weight_sums: Vec<f64>,
}

pub fn fit_adaboost_traced(x: &DesignMatrix, params: &AdaBoostParams, seed: u64) -> Result<(AdaBoostModel, BoostTrace)> {
    let n = x.n_rows();
    let labels = x.labels();
    let rows: Vec<usize> = (0..n).collect();
    let mut weights = vec![1.0 / n as f64; n];
    let mut stumps = Vec::with_capacity(params.n_estimators);
    let mut trace = BoostTrace::default();
    for _ in 0..params.n_estimators {
        let mut stump = grow_tree(
            x,
            &rows,
            GrowTarget::Classification { labels, weights: &weights, criterion: Criterion::Gini },
            &GrowParams { max_depth: Some(1), min_samples_leaf: 1, max_features: None, seed },
        )?;
        let probs: Vec<f64> = x.rows().map(|r| stump.predict(r)).collect();
        let error: f64 = probs
            .iter()
            .zip(labels)
            .zip(&weights)
            .filter(|((p, &y), _)| u8::from(**p > 0.5) != y)
            .map(|(_, w)| w)
            .sum::<f64>()
            / weights.iter().sum::<f64>();
        trace.stump_errors.push(error);
        if error >= 0.5 && !stumps.is_empty() {
            trace.stump_errors.pop();
            break;
        }
        let lr = params.learning_rate;
        stump.map_leaves(|p| {
            let p = p.clamp(PROBABILITY_CLIP, 1.0 - PROBABILITY_CLIP);
            lr * (p / (1.0 - p)).ln()
        });
        let contributions: Vec<f64> = x.rows().map(|r| stump.predict(r)).collect();
        stumps.push(stump);
        if error <= 0.0 || error >= 0.5 {
            break;
        }
        for ((w, &y), h) in weights.iter_mut().zip(labels).zip(&contributions) {
            let sign = if y == 1 { 1.0 } else { -1.0 };
            *w *= (-0.5 * sign * h).exp();
        }
        let total: f64 = weights.iter().sum();
        weights.iter_mut().for_each(|w| *w /= total);
        trace.weight_sums.push(weights.iter().sum());
    }
    Ok((AdaBoostModel { stumps }, trace))
}

pub fn fit_adaboost(x: &DesignMatrix, params: &AdaBoostParams, seed: u64) -> Result<AdaBoostModel> {
    fit_adaboost_traced(x, params, seed).map(|(m, _)| m)
}
