use rand::seq::SliceRandom;

use crate::data::dataset::Dataset;
use crate::data::matrix::DesignMatrix;
use crate::error::{Error, Result};
use crate::rng::child_rng;

/// Row-indexable labeled data that can be partitioned.
pub trait RowSubset: Sized {
    fn labels(&self) -> &[u8];
    fn subset(&self, indices: &[usize]) -> Self;
}

impl RowSubset for Dataset {
    fn labels(&self) -> &[u8] {
        Dataset::labels(self)
    }
    fn subset(&self, indices: &[usize]) -> Self {
        Dataset::subset(self, indices)
    }
}

impl RowSubset for DesignMatrix {
    fn labels(&self) -> &[u8] {
        DesignMatrix::labels(self)
    }
    fn subset(&self, indices: &[usize]) -> Self {
        self.select_rows(indices)
    }
}

#[derive(Debug, Clone)]
pub struct SplitPair<T> {
    pub train: T,
    pub test: T,
    /// Original row indices, ascending.
    pub train_indices: Vec<usize>,
    pub test_indices: Vec<usize>,
    pub seed: u64,
    pub test_fraction: f64,
}

/// Splits `n` items into integer quotas proportional to `weights` summing to
/// `total`, by largest remainder (ties to the lower index).
pub(crate) fn apportion(weights: &[usize], total: usize) -> Vec<usize> {
    let sum: usize = weights.iter().sum();
    let exact: Vec<f64> = weights.iter().map(|&w| w as f64 * total as f64 / sum as f64).collect();
    let mut quota: Vec<usize> = exact.iter().map(|e| e.floor() as usize).collect();
    let mut order: Vec<usize> = (0..weights.len()).collect();
    order.sort_by(|&a, &b| (exact[b] - exact[b].floor()).total_cmp(&(exact[a] - exact[a].floor())).then(a.cmp(&b)));
    let mut left = total - quota.iter().sum::<usize>();
    for i in order {
        if left == 0 {
            break;
        }
        quota[i] += 1;
        left -= 1;
    }
    quota
}

/// Stratified train/test partition. The test side gets
/// `round(n * test_fraction)` rows (kept within `1..n`), apportioned across
/// the two classes by largest remainder; rows within each class are chosen
/// by a seeded shuffle.
pub fn stratified_split<T: RowSubset>(data: &T, test_fraction: f64, seed: u64) -> Result<SplitPair<T>> {
    if !(test_fraction > 0.0 && test_fraction < 1.0) {
        return Err(Error::Config(format!("test fraction {test_fraction} outside (0, 1)")));
    }
    let labels = data.labels();
    let n = labels.len();
    let by_class: [Vec<usize>; 2] =
        [0u8, 1].map(|c| (0..n).filter(|&i| labels[i] == c).collect());
    if by_class.iter().any(Vec::is_empty) {
        return Err(Error::Data("stratified split needs rows of both classes".into()));
    }
    let n_test = ((n as f64 * test_fraction).round() as usize).clamp(1, n - 1);
    let quotas = apportion(&[by_class[0].len(), by_class[1].len()], n_test);

    let mut test = Vec::with_capacity(n_test);
    let mut train = Vec::with_capacity(n - n_test);
    for (c, mut idx) in by_class.into_iter().enumerate() {
        idx.shuffle(&mut child_rng(seed, &[c as u64]));
        test.extend_from_slice(&idx[..quotas[c]]);
        train.extend_from_slice(&idx[quotas[c]..]);
    }
    test.sort_unstable();
    train.sort_unstable();
    Ok(SplitPair {
        train: data.subset(&train),
        test: data.subset(&test),
        train_indices: train,
        test_indices: test,
        seed,
        test_fraction,
    })
}
