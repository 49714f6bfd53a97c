use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::data::DesignMatrix;
use crate::error::Result;
use crate::models::params::ForestParams;
use crate::models::tree::{grow_tree, GrowParams, GrowTarget, Tree};
use crate::rng::{child_rng, derive_seed};

/// Bagged classification trees; the score is the mean leaf class-1 share.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForestModel {
    pub trees: Vec<Tree>,
}

impl ForestModel {
    pub fn predict(&self, row: &[f64]) -> f64 {
        self.trees.iter().map(|t| t.predict(row)).sum::<f64>() / self.trees.len() as f64
    }
}

/// Tree `t` draws its bootstrap sample and its split features from seeds
/// derived from `(seed, t)`, so trees are independent of fitting order.
pub fn fit_forest(x: &DesignMatrix, params: &ForestParams, seed: u64) -> Result<ForestModel> {
    let n = x.n_rows();
    let weights = vec![1.0; n];
    let target = GrowTarget::Classification { labels: x.labels(), weights: &weights, criterion: params.criterion };
    let max_features = params.max_features.resolve(x.n_cols());
    let trees = (0..params.n_estimators)
        .map(|t| {
            let rows: Vec<usize> = if params.bootstrap {
                let mut rng = child_rng(seed, &[t as u64, 0]);
                let mut rows: Vec<usize> = (0..n).map(|_| rng.gen_range(0..n)).collect();
                rows.sort_unstable();
                rows
            } else {
                (0..n).collect()
            };
            grow_tree(
                x,
                &rows,
                target,
                &GrowParams {
                    max_depth: params.max_depth,
                    min_samples_leaf: params.min_samples_leaf,
                    max_features: Some(max_features),
                    seed: derive_seed(seed, &[t as u64, 1]),
                },
            )
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ForestModel { trees })
}
