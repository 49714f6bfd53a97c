//! Second-order gradient boosting on the logistic loss.
//!
//! Each round fits a tree to the gradients `p - y` and hessians `p(1 - p)`
//! of the current margin; leaves hold `-G / (H + 1)` scaled by the learning
//! rate, and a split must reduce the loss by more than `gamma`.

use serde::{Deserialize, Serialize};

use crate::data::DesignMatrix;
use crate::error::Result;
use crate::models::params::GbtParams;
use crate::models::tree::{grow_tree, GrowParams, GrowTarget, Tree};
use crate::rng::derive_seed;
use crate::select::sigmoid;

pub const LEAF_LAMBDA: f64 = 1.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GbtModel {
    pub base_margin: f64,
    pub trees: Vec<Tree>,
}

impl GbtModel {
    pub fn margin(&self, row: &[f64]) -> f64 {
        self.base_margin + self.trees.iter().map(|t| t.predict(row)).sum::<f64>()
    }

    pub fn predict(&self, row: &[f64]) -> f64 {
        sigmoid(self.margin(row))
    }
}

pub fn mean_log_loss(labels: &[u8], margins: &[f64]) -> f64 {
    labels
        .iter()
        .zip(margins)
        .map(|(&y, &m)| {
            let softplus = if m > 0.0 { m + (-m).exp().ln_1p() } else { m.exp().ln_1p() };
            softplus - f64::from(y) * m
        })
        .sum::<f64>()
        / labels.len() as f64
}

/// Fits the booster and returns the mean training log-loss before the first
/// round and after each round.
pub fn fit_gbt_traced(x: &DesignMatrix, params: &GbtParams, seed: u64) -> Result<(GbtModel, Vec<f64>)> {
    let n = x.n_rows();
    let labels = x.labels();
    let rows: Vec<usize> = (0..n).collect();
    let base_margin = 0.0;
    let mut margins = vec![base_margin; n];
    let mut grad = vec![0.0; n];
    let mut hess = vec![0.0; n];
    let mut trees = Vec::with_capacity(params.n_estimators);
    let mut losses = vec![mean_log_loss(labels, &margins)];
    for round in 0..params.n_estimators {
        for i in 0..n {
            let p = sigmoid(margins[i]);
            grad[i] = p - f64::from(labels[i]);
            hess[i] = (p * (1.0 - p)).max(1e-16);
        }
        let mut tree = grow_tree(
            x,
            &rows,
            GrowTarget::SecondOrder {
                grad: &grad,
                hess: &hess,
                lambda: LEAF_LAMBDA,
                min_split_loss: params.gamma,
                min_child_weight: params.min_child_weight,
            },
            &GrowParams {
                max_depth: Some(params.max_depth),
                min_samples_leaf: 1,
                max_features: None,
                seed: derive_seed(seed, &[round as u64]),
            },
        )?;
        let lr = params.learning_rate;
        tree.map_leaves(|v| lr * v);
        for (m, r) in margins.iter_mut().zip(x.rows()) {
            *m += tree.predict(r);
        }
        trees.push(tree);
        losses.push(mean_log_loss(labels, &margins));
    }
    Ok((GbtModel { base_margin, trees }, losses))
}

pub fn fit_gbt(x: &DesignMatrix, params: &GbtParams, seed: u64) -> Result<GbtModel> {
    fit_gbt_traced(x, params, seed).map(|(m, _)| m)
}
