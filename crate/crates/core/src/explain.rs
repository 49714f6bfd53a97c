//! Interventional Shapley attributions: exact subset enumeration for any
//! model, and a tree-path algorithm for tree ensembles that computes the same
//! values in time linear in background size.

use std::path::Path;

use rand::seq::index::sample;
use serde::{Deserialize, Serialize};

use crate::data::DesignMatrix;
use crate::error::{Error, Result};
use crate::models::tree::{Tree, TreeNode};
use crate::models::FittedModel;
use crate::rng::rng_from;

/// Largest feature count accepted by subset enumeration.
pub const MAX_BRUTE_FORCE_FEATURES: usize = 20;

/// Tolerance for `base + Σ attributions = output`.
pub const LOCAL_ACCURACY_TOL: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShapMatrix {
    /// One attribution vector per explained row.
    pub values: Vec<Vec<f64>>,
    /// Mean explained output over the background.
    pub base_value: f64,
    pub column_names: Vec<String>,
    /// Whether attributions decompose a pre-sigmoid margin.
    pub is_margin: bool,
}

/// Features by mean |attribution|, largest first.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GlobalImportance {
    pub entries: Vec<(String, f64)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LocalRecord {
    pub row: usize,
    pub feature: String,
    pub shap: f64,
    /// Feature value rank-normalized to `[0, 1]` across the explained rows.
    pub norm_value: f64,
}

fn check_background(model: &FittedModel, background: &DesignMatrix) -> Result<()> {
    if background.n_rows() == 0 {
        return Err(Error::Data("explanation background is empty".into()));
    }
    if background.n_cols() != model.column_names.len() {
        return Err(Error::ColumnMismatch {
            expected: model.column_names.clone(),
            found: background.column_names().to_vec(),
        });
    }
    Ok(())
}

fn factorials(n: usize) -> Vec<f64> {
    let mut f = vec![1.0; n + 1];
    for i in 1..=n {
        f[i] = f[i - 1] * i as f64;
    }
    f
}

/// Exact Shapley values of `v(S) = mean_b f(row_S, b_rest)` by enumerating
/// all `2^p` coalitions, where `f` is the model's explained output.
pub fn shap_brute_force(model: &FittedModel, row: &[f64], background: &DesignMatrix) -> Result<Vec<f64>> {
    check_background(model, background)?;
    let p = row.len();
    if p > MAX_BRUTE_FORCE_FEATURES {
        return Err(Error::Config(format!(
            "subset enumeration supports at most {MAX_BRUTE_FORCE_FEATURES} features, got {p}"
        )));
    }
    let mut hybrid = vec![0.0; p];
    let v: Vec<f64> = (0..1usize << p)
        .map(|mask| {
            let total: f64 = background
                .rows()
                .map(|b| {
                    for j in 0..p {
                        hybrid[j] = if mask >> j & 1 == 1 { row[j] } else { b[j] };
                    }
                    model.explained_output(&hybrid)
                })
                .sum();
            total / background.n_rows() as f64
        })
        .collect();
    let fact = factorials(p);
    let mut phi = vec![0.0; p];
    for mask in 0..1usize << p {
        let s = mask.count_ones() as usize;
        if s == p {
            continue;
        }
        let w = fact[s] * fact[p - s - 1] / fact[p];
        for (j, pj) in phi.iter_mut().enumerate() {
            if mask >> j & 1 == 0 {
                *pj += w * (v[mask | 1 << j] - v[mask]);
            }
        }
    }
    Ok(phi)
}

/// Adds to `phi` the attributions of one tree for the single-reference game
/// `v(S) = tree(x_S, b_rest)`, scaled by `weight`.
///
/// Paths for `x` and `b` are followed together. Where they part on a feature
/// not yet fixed, both branches are explored: the `x` branch fixes the feature
/// to come from `x` (set A), the `b` branch to come from `b` (set B). A leaf
/// reached with sets A, B is worth its value exactly on coalitions containing
/// A and avoiding B, whose Shapley values have a closed form.
fn tree_pair(tree: &Tree, x: &[f64], b: &[f64], weight: f64, fact: &[f64], phi: &mut [f64]) {
    let mut stack = vec![(0usize, Vec::<usize>::new(), Vec::<usize>::new())];
    while let Some((at, from_x, from_b)) = stack.pop() {
        match tree.nodes[at] {
            TreeNode::Leaf { value, .. } => {
                let (a, c) = (from_x.len(), from_b.len());
                let v = weight * value;
                if a > 0 {
                    let wa = v * fact[a - 1] * fact[c] / fact[a + c];
                    for &j in &from_x {
                        phi[j] += wa;
                    }
                }
                if c > 0 {
                    let wb = v * fact[a] * fact[c - 1] / fact[a + c];
                    for &j in &from_b {
                        phi[j] -= wb;
                    }
                }
            }
            TreeNode::Split { feature, threshold, left, right, .. } => {
                let go = |v: f64| if v <= threshold { left } else { right };
                let (nx, nb) = (go(x[feature]), go(b[feature]));
                if from_x.contains(&feature) {
                    stack.push((nx, from_x, from_b));
                } else if from_b.contains(&feature) {
                    stack.push((nb, from_x, from_b));
                } else if nx == nb {
                    stack.push((nx, from_x, from_b));
                } else {
                    let mut bx = from_b.clone();
                    bx.push(feature);
                    stack.push((nb, from_x.clone(), bx));
                    let mut ax = from_x;
                    ax.push(feature);
                    stack.push((nx, ax, from_b));
                }
            }
        }
    }
}

/// Tree-path attributions of a tree-based model; identical to
/// [`shap_brute_force`] up to rounding.
pub fn shap_tree(model: &FittedModel, row: &[f64], background: &DesignMatrix) -> Result<Vec<f64>> {
    check_background(model, background)?;
    let view = model
        .tree_view()
        .ok_or_else(|| Error::Config(format!("{} is not tree-based; use subset enumeration", model.kind())))?;
    let p = row.len();
    let depth = view.trees.iter().map(Tree::depth).max().unwrap_or(0);
    let fact = factorials(depth.min(p) + 1);
    let mut phi = vec![0.0; p];
    let weight = view.scale / background.n_rows() as f64;
    for b in background.rows() {
        for tree in view.trees {
            tree_pair(tree, row, b, weight, &fact, &mut phi);
        }
    }
    Ok(phi)
}

/// Seeded sample of at most `size` rows (all rows when there are fewer),
/// kept in original order.
pub fn background_sample(x: &DesignMatrix, size: usize, seed: u64) -> Result<DesignMatrix> {
    if size == 0 || x.n_rows() == 0 {
        return Err(Error::Config("background needs at least one row".into()));
    }
    if x.n_rows() <= size {
        return Ok(x.clone());
    }
    let mut idx = sample(&mut rng_from(seed), x.n_rows(), size).into_vec();
    idx.sort_unstable();
    Ok(x.select_rows(&idx))
}

/// Attributions for every row of `x`, by the tree-path algorithm when the
/// model allows it and by enumeration otherwise. Local accuracy is verified
/// for each row.
pub fn explain_rows(model: &FittedModel, x: &DesignMatrix, background: &DesignMatrix) -> Result<ShapMatrix> {
    if x.column_names() != model.column_names.as_slice() {
        return Err(Error::ColumnMismatch { expected: model.column_names.clone(), found: x.column_names().to_vec() });
    }
    check_background(model, background)?;
    let base_value = background.rows().map(|b| model.explained_output(b)).sum::<f64>() / background.n_rows() as f64;
    let tree_based = model.tree_view().is_some();
    let mut values = Vec::with_capacity(x.n_rows());
    for (i, row) in x.rows().enumerate() {
        let phi = if tree_based {
            shap_tree(model, row, background)?
        } else {
            shap_brute_force(model, row, background)?
        };
        let gap = base_value + phi.iter().sum::<f64>() - model.explained_output(row);
        if gap.abs() >= LOCAL_ACCURACY_TOL {
            return Err(Error::Model(format!("local accuracy violated on row {i}: gap {gap:e}")));
        }
        values.push(phi);
    }
    Ok(ShapMatrix {
        values,
        base_value,
        column_names: model.column_names.clone(),
        is_margin: model.tree_view().is_some_and(|v| v.is_margin),
    })
}

/// Mean |attribution| per feature, sorted descending with ties by name.
pub fn global_importance(shap: &ShapMatrix) -> Result<GlobalImportance> {
    let n = shap.values.len();
    if n == 0 || shap.column_names.is_empty() {
        return Err(Error::Data("cannot rank an empty attribution matrix".into()));
    }
    let mut entries: Vec<(String, f64)> = shap
        .column_names
        .iter()
        .enumerate()
        .map(|(j, name)| (name.clone(), shap.values.iter().map(|r| r[j].abs()).sum::<f64>() / n as f64))
        .collect();
    entries.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    Ok(GlobalImportance { entries })
}

/// Dense ranks of `values` scaled to `[0, 1]`; a constant column maps to 0.5.
fn rank_normalize(values: &[f64]) -> Vec<f64> {
    let mut distinct = values.to_vec();
    distinct.sort_by(f64::total_cmp);
    distinct.dedup();
    if distinct.len() < 2 {
        return vec![0.5; values.len()];
    }
    let top = (distinct.len() - 1) as f64;
    values
        .iter()
        .map(|v| distinct.binary_search_by(|d| d.total_cmp(v)).expect("value present") as f64 / top)
        .collect()
}

/// Long-format (row, feature) records for a beeswarm-style plot.
pub fn local_summary(shap: &ShapMatrix, x: &DesignMatrix) -> Result<Vec<LocalRecord>> {
    if x.n_rows() != shap.values.len() || x.n_cols() != shap.column_names.len() {
        return Err(Error::Data(format!(
            "attributions are {}x{} but the feature matrix is {}x{}",
            shap.values.len(),
            shap.column_names.len(),
            x.n_rows(),
            x.n_cols()
        )));
    }
    let norms: Vec<Vec<f64>> = (0..x.n_cols()).map(|j| rank_normalize(&x.column(j))).collect();
    let mut out = Vec::with_capacity(x.n_rows() * x.n_cols());
    for (i, phi) in shap.values.iter().enumerate() {
        for (j, name) in shap.column_names.iter().enumerate() {
            out.push(LocalRecord { row: i, feature: name.clone(), shap: phi[j], norm_value: norms[j][i] });
        }
    }
    Ok(out)
}

/// `feature,mean_abs_shap,rank` with rank starting at 1.
pub fn write_global_csv(importance: &GlobalImportance, path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["feature", "mean_abs_shap", "rank"])?;
    for (rank, (name, v)) in importance.entries.iter().enumerate() {
        w.write_record([name.clone(), v.to_string(), (rank + 1).to_string()])?;
    }
    w.flush()?;
    Ok(())
}

/// `row,feature,shap,norm_value`.
pub fn write_local_csv(records: &[LocalRecord], path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["row", "feature", "shap", "norm_value"])?;
    for r in records {
        w.write_record([r.row.to_string(), r.feature.clone(), r.shap.to_string(), r.norm_value.to_string()])?;
    }
    w.flush()?;
    Ok(())
}
