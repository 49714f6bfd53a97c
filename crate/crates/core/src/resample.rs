//! SMOTE: synthetic minority oversampling by interpolation toward minority
//! nearest neighbours.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::data::DesignMatrix;
use crate::error::{Error, Result};
use crate::rng::child_rng;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SmoteConfig {
    pub k_neighbors: usize,
    /// Desired minority/majority count ratio after resampling, in (0, 1].
    pub target_ratio: f64,
    pub seed: u64,
}

impl Default for SmoteConfig {
    fn default() -> Self {
        Self { k_neighbors: 5, target_ratio: 1.0, seed: 42 }
    }
}

/// Parents of one synthetic row, as indices into the input matrix.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SyntheticOrigin {
    pub seed_row: usize,
    pub neighbor_row: usize,
}

#[derive(Debug, Clone)]
pub struct Resampled {
    /// Input rows unchanged (as a prefix) followed by synthetic minority rows.
    pub matrix: DesignMatrix,
    pub origins: Vec<SyntheticOrigin>,
}

fn squared_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// The `k` nearest other minority rows of every minority row, as positions
/// into `minority`. Ties in distance go to the lower row index.
fn nearest_neighbors(train: &DesignMatrix, minority: &[usize], k: usize) -> Vec<Vec<usize>> {
    minority
        .iter()
        .enumerate()
        .map(|(a, &ia)| {
            let mut cand: Vec<(f64, usize)> = minority
                .iter()
                .enumerate()
                .filter(|&(b, _)| b != a)
                .map(|(b, &ib)| (squared_distance(train.row(ia), train.row(ib)), b))
                .collect();
            cand.sort_by(|x, y| x.0.total_cmp(&y.0).then(minority[x.1].cmp(&minority[y.1])));
            cand.truncate(k);
            cand.into_iter().map(|(_, b)| b).collect()
        })
        .collect()
}

/// Oversamples the minority class of `train` up to `target_ratio`, recording
/// the parents of each synthetic row.
pub fn smote_with_origins(train: &DesignMatrix, config: &SmoteConfig) -> Result<Resampled> {
    if config.k_neighbors == 0 {
        return Err(Error::Config("SMOTE needs k_neighbors >= 1".into()));
    }
    if !(config.target_ratio > 0.0 && config.target_ratio <= 1.0) {
        return Err(Error::Config(format!("SMOTE target ratio {} outside (0, 1]", config.target_ratio)));
    }
    let (neg, pos) = train.class_counts();
    if neg == 0 || pos == 0 {
        return Err(Error::Data("SMOTE needs both classes".into()));
    }
    let minority_label = u8::from(pos < neg);
    let (n_min, n_maj) = (neg.min(pos), neg.max(pos));
    let wanted = (config.target_ratio * n_maj as f64).round() as usize;
    if wanted + 1 < n_min {
        return Err(Error::Config(format!(
            "SMOTE target ratio {} is below the current ratio {:.4}",
            config.target_ratio,
            n_min as f64 / n_maj as f64
        )));
    }
    if wanted <= n_min {
        return Ok(Resampled { matrix: train.clone(), origins: Vec::new() });
    }
    if config.k_neighbors >= n_min {
        return Err(Error::Config(format!(
            "SMOTE k_neighbors = {} needs more than {n_min} minority rows",
            config.k_neighbors
        )));
    }
    let minority: Vec<usize> = (0..train.n_rows()).filter(|&i| train.labels()[i] == minority_label).collect();
    let neighbors = nearest_neighbors(train, &minority, config.k_neighbors);

    let mut out = train.clone();
    let mut origins = Vec::with_capacity(wanted - n_min);
    let mut synthetic = vec![0.0; train.n_cols()];
    for j in 0..wanted - n_min {
        let a = j % n_min;
        let mut rng = child_rng(config.seed, &[j as u64]);
        let b = neighbors[a][rng.gen_range(0..neighbors[a].len())];
        let gap: f64 = rng.gen();
        let (xa, xb) = (train.row(minority[a]), train.row(minority[b]));
        for (s, (u, v)) in synthetic.iter_mut().zip(xa.iter().zip(xb)) {
            *s = u + gap * (v - u);
        }
        out.push_row(&synthetic, minority_label);
        origins.push(SyntheticOrigin { seed_row: minority[a], neighbor_row: minority[b] });
    }
    Ok(Resampled { matrix: out, origins })
}

/// Oversamples the minority class of `train` up to `target_ratio`.
pub fn smote(train: &DesignMatrix, config: &SmoteConfig) -> Result<DesignMatrix> {
    smote_with_origins(train, config).map(|r| r.matrix)
}
