//! Binary CART trees shared by the tree, forest, AdaBoost and gradient
//! boosting models.
//!
//! Rows go left when `x[feature] <= threshold`. Candidate thresholds are the
//! midpoints of consecutive distinct feature values within a node. Among
//! equally good splits the lowest feature index wins, then the lowest
//! threshold.

use rand::seq::index::sample;
use serde::{Deserialize, Serialize};

use crate::data::DesignMatrix;
use crate::error::{Error, Result};
use crate::rng::rng_from;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Criterion {
    Gini,
    Entropy,
}

impl Criterion {
    /// Impurity of a node with class weights `w0`, `w1`.
    pub fn impurity(self, w0: f64, w1: f64) -> f64 {
        let total = w0 + w1;
        if total <= 0.0 {
            return 0.0;
        }
        let (p0, p1) = (w0 / total, w1 / total);
        match self {
            Criterion::Gini => 1.0 - p0 * p0 - p1 * p1,
            Criterion::Entropy => {
                let h = |p: f64| if p > 0.0 { -p * p.log2() } else { 0.0 };
                h(p0) + h(p1)
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "node", rename_all = "snake_case")]
pub enum TreeNode {
    Split { feature: usize, threshold: f64, left: usize, right: usize, samples: usize },
    Leaf { value: f64, samples: usize },
}

/// Nodes in an arena; the root is `nodes[0]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tree {
    pub nodes: Vec<TreeNode>,
}

impl Tree {
    pub fn leaf(value: f64) -> Self {
        Self { nodes: vec![TreeNode::Leaf { value, samples: 0 }] }
    }

    pub fn predict(&self, row: &[f64]) -> f64 {
        let mut at = 0;
        loop {
            match self.nodes[at] {
                TreeNode::Split { feature, threshold, left, right, .. } => {
                    at = if row[feature] <= threshold { left } else { right };
                }
                TreeNode::Leaf { value, .. } => return value,
            }
        }
    }

    /// Depth of the deepest leaf (a single leaf has depth 0).
    pub fn depth(&self) -> usize {
        let mut best = 0;
        let mut stack = vec![(0usize, 0usize)];
        while let Some((at, d)) = stack.pop() {
            match self.nodes[at] {
                TreeNode::Split { left, right, .. } => {
                    stack.push((left, d + 1));
                    stack.push((right, d + 1));
                }
                TreeNode::Leaf { .. } => best = best.max(d),
            }
        }
        best
    }

    /// Features used by at least one split.
    pub fn split_features(&self) -> Vec<usize> {
        let mut f: Vec<usize> = self
            .nodes
            .iter()
            .filter_map(|n| match n {
                TreeNode::Split { feature, .. } => Some(*feature),
                TreeNode::Leaf { .. } => None,
            })
            .collect();
        f.sort_unstable();
        f.dedup();
        f
    }

    /// Applies `f` to every leaf value.
    pub fn map_leaves(&mut self, f: impl Fn(f64) -> f64) {
        for n in &mut self.nodes {
            if let TreeNode::Leaf { value, .. } = n {
                *value = f(*value);
            }
        }
    }
}

/// What a tree is fitted to.
#[derive(Debug, Clone, Copy)]
pub enum GrowTarget<'a> {
    /// Weighted class-probability tree; leaves hold the weighted share of class 1.
    Classification { labels: &'a [u8], weights: &'a [f64], criterion: Criterion },
    /// Second-order boosting tree; leaves hold `-G / (H + lambda)`.
    SecondOrder { grad: &'a [f64], hess: &'a [f64], lambda: f64, min_split_loss: f64, min_child_weight: f64 },
}

#[derive(Debug, Clone, Copy)]
pub struct GrowParams {
    pub max_depth: Option<usize>,
    pub min_samples_leaf: usize,
    /// Features drawn (without replacement) per split; `None` uses all.
    pub max_features: Option<usize>,
    pub seed: u64,
}

impl Default for GrowParams {
    fn default() -> Self {
        Self { max_depth: None, min_samples_leaf: 1, max_features: None, seed: 0 }
    }
}

#[derive(Clone, Copy, Default)]
struct Stats {
    count: usize,
    a: f64,
    b: f64,
}

impl Stats {
    fn add(&mut self, other: (f64, f64)) {
        self.count += 1;
        self.a += other.0;
        self.b += other.1;
    }
}

impl GrowTarget<'_> {
    /// Per-row sufficient statistics: class weights `(w0, w1)` or `(g, h)`.
    fn stat(&self, i: usize) -> (f64, f64) {
        match *self {
            GrowTarget::Classification { labels, weights, .. } => {
                if labels[i] == 1 {
                    (0.0, weights[i])
                } else {
                    (weights[i], 0.0)
                }
            }
            GrowTarget::SecondOrder { grad, hess, .. } => (grad[i], hess[i]),
        }
    }

    /// Node score; split gain is `score(L) + score(R) - score(parent)`.
    fn score(&self, s: &Stats) -> f64 {
        match *self {
            GrowTarget::Classification { criterion, .. } => -(s.a + s.b) * criterion.impurity(s.a, s.b),
            GrowTarget::SecondOrder { lambda, .. } => 0.5 * s.a * s.a / (s.b + lambda),
        }
    }

    fn leaf_value(&self, s: &Stats) -> f64 {
        match *self {
            GrowTarget::Classification { .. } => {
                let total = s.a + s.b;
                if total > 0.0 {
                    s.b / total
                } else {
                    0.5
                }
            }
            GrowTarget::SecondOrder { lambda, .. } => -s.a / (s.b + lambda),
        }
    }

    fn min_gain(&self) -> f64 {
        match *self {
            GrowTarget::Classification { .. } => 0.0,
            GrowTarget::SecondOrder { min_split_loss, .. } => min_split_loss,
        }
    }

    fn child_ok(&self, s: &Stats, min_samples_leaf: usize) -> bool {
        s.count >= min_samples_leaf
            && match *self {
                GrowTarget::Classification { .. } => true,
                GrowTarget::SecondOrder { min_child_weight, .. } => s.b >= min_child_weight,
            }
    }

    fn is_pure(&self, s: &Stats) -> bool {
        match *self {
            GrowTarget::Classification { .. } => s.a <= 0.0 || s.b <= 0.0,
            GrowTarget::SecondOrder { .. } => false,
        }
    }

    fn len(&self) -> usize {
        match *self {
            GrowTarget::Classification { labels, weights, .. } => labels.len().min(weights.len()),
            GrowTarget::SecondOrder { grad, hess, .. } => grad.len().min(hess.len()),
        }
    }
}

struct BestSplit {
    gain: f64,
    feature: usize,
    threshold: f64,
}

fn best_split(
    x: &DesignMatrix,
    rows: &[usize],
    target: &GrowTarget<'_>,
    parent: &Stats,
    features: &[usize],
    min_samples_leaf: usize,
    buf: &mut Vec<(f64, usize)>,
) -> Option<BestSplit> {
    let parent_score = target.score(parent);
    let tol = 1e-12 * parent_score.abs().max(1.0);
    let mut best: Option<BestSplit> = None;
    for &f in features {
        buf.clear();
        buf.extend(rows.iter().map(|&i| (x.get(i, f), i)));
        buf.sort_unstable_by(|a, b| a.0.total_cmp(&b.0));
        if buf[0].0 == buf[buf.len() - 1].0 {
            continue;
        }
        let mut left = Stats::default();
        for k in 0..buf.len() - 1 {
            left.add(target.stat(buf[k].1));
            let (v, next) = (buf[k].0, buf[k + 1].0);
            if v == next {
                continue;
            }
            let right = Stats { count: parent.count - left.count, a: parent.a - left.a, b: parent.b - left.b };
            if !target.child_ok(&left, min_samples_leaf) || !target.child_ok(&right, min_samples_leaf) {
                continue;
            }
            let gain = target.score(&left) + target.score(&right) - parent_score;
            if gain <= tol || gain <= target.min_gain() {
                continue;
            }
            if best.as_ref().is_none_or(|b| gain > b.gain) {
                best = Some(BestSplit { gain, feature: f, threshold: 0.5 * (v + next) });
            }
        }
    }
    best
}

/// Grows a tree greedily on the rows listed in `rows` (repeats allowed, as
/// for bootstrap samples). Stops at `max_depth`, when children would fall
/// under `min_samples_leaf`, when a classification node is pure, or when no
/// split improves the objective (by more than `min_split_loss` for
/// second-order trees).
pub fn grow_tree(x: &DesignMatrix, rows: &[usize], target: GrowTarget<'_>, params: &GrowParams) -> Result<Tree> {
    if rows.is_empty() {
        return Err(Error::Data("cannot grow a tree on zero rows".into()));
    }
    if target.len() < x.n_rows() {
        return Err(Error::Data("tree target is shorter than the matrix".into()));
    }
    if let GrowTarget::Classification { labels, .. } = target {
        if rows.iter().any(|&i| labels[i] > 1) {
            return Err(Error::Data("classification labels must be 0/1".into()));
        }
    }
    let p = x.n_cols();
    let all_features: Vec<usize> = (0..p).collect();
    let mut rng = rng_from(params.seed);
    let mut buf = Vec::with_capacity(rows.len());
    let mut nodes: Vec<TreeNode> = Vec::new();
    // (node slot, rows, depth)
    let mut work: Vec<(usize, Vec<usize>, usize)> = Vec::new();
    nodes.push(TreeNode::Leaf { value: 0.0, samples: 0 });
    work.push((0, rows.to_vec(), 0));
    while let Some((slot, node_rows, depth)) = work.pop() {
        let mut stats = Stats::default();
        for &i in &node_rows {
            stats.add(target.stat(i));
        }
        let leaf = TreeNode::Leaf { value: target.leaf_value(&stats), samples: node_rows.len() };
        let depth_ok = params.max_depth.is_none_or(|d| depth < d);
        if !depth_ok || target.is_pure(&stats) || node_rows.len() < 2 * params.min_samples_leaf.max(1) {
            nodes[slot] = leaf;
            continue;
        }
        let subset;
        let features: &[usize] = match params.max_features {
            Some(k) if k < p => {
                let mut s = sample(&mut rng, p, k).into_vec();
                s.sort_unstable();
                subset = s;
                &subset
            }
            _ => &all_features,
        };
        match best_split(x, &node_rows, &target, &stats, features, params.min_samples_leaf, &mut buf) {
            None => nodes[slot] = leaf,
            Some(split) => {
                let (l, r): (Vec<usize>, Vec<usize>) =
                    node_rows.iter().partition(|&&i| x.get(i, split.feature) <= split.threshold);
                let left = nodes.len();
                nodes.push(TreeNode::Leaf { value: 0.0, samples: 0 });
                let right = nodes.len();
                nodes.push(TreeNode::Leaf { value: 0.0, samples: 0 });
                nodes[slot] = TreeNode::Split {
                    feature: split.feature,
                    threshold: split.threshold,
                    left,
                    right,
                    samples: node_rows.len(),
                };
                // right first so the left subtree is built first
                work.push((right, r, depth + 1));
                work.push((left, l, depth + 1));
            }
        }
    }
    Ok(Tree { nodes })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn matrix(rows: &[Vec<f64>], labels: Vec<u8>) -> DesignMatrix {
        let p = rows[0].len();
        DesignMatrix::from_rows((0..p).map(|j| format!("x{j}")).collect(), rows, labels).unwrap()
    }

    fn classify(x: &DesignMatrix, depth: Option<usize>, criterion: Criterion) -> Tree {
        let w = vec![1.0; x.n_rows()];
        let rows: Vec<usize> = (0..x.n_rows()).collect();
        grow_tree(
            x,
            &rows,
            GrowTarget::Classification { labels: x.labels(), weights: &w, criterion },
            &GrowParams { max_depth: depth, ..Default::default() },
        )
        .unwrap()
    }

    fn accuracy(t: &Tree, x: &DesignMatrix) -> f64 {
        x.rows().zip(x.labels()).filter(|(r, &y)| u8::from(t.predict(r) >= 0.5) == y).count() as f64 / x.n_rows() as f64
    }

    #[test]
    fn pure_node_is_a_leaf() {
        let x = matrix(&[vec![0.0], vec![1.0], vec![2.0]], vec![1, 1, 1]);
        let t = classify(&x, None, Criterion::Entropy);
        assert_eq!(t.nodes.len(), 1);
        assert_eq!(Criterion::Entropy.impurity(0.0, 3.0), 0.0);
        assert_eq!(t.predict(&[5.0]), 1.0);
    }

    #[test]
    fn separable_pair_gives_midpoint_stump() {
        let x = matrix(&[vec![0.0], vec![1.0]], vec![0, 1]);
        let t = classify(&x, Some(1), Criterion::Gini);
        match t.nodes[0] {
            TreeNode::Split { feature, threshold, .. } => assert_eq!((feature, threshold), (0, 0.5)),
            _ => panic!("expected a split"),
        }
        assert_eq!(accuracy(&t, &x), 1.0);
    }

    #[test]
    fn xor_is_unsplittable_at_depth_one() {
        let x = matrix(&[vec![0.0, 0.0], vec![0.0, 1.0], vec![1.0, 0.0], vec![1.0, 1.0]], vec![0, 1, 1, 0]);
        let stump = classify(&x, Some(1), Criterion::Entropy);
        assert_eq!(accuracy(&stump, &x), 0.5);
    }

    #[test]
    fn respects_depth_and_leaf_size() {
        let rows: Vec<Vec<f64>> = (0..64).map(|i| vec![(i % 8) as f64, (i / 8) as f64]).collect();
        let labels = (0..64).map(|i| u8::from((i * 7 + i / 5) % 3 == 0)).collect();
        let x = matrix(&rows, labels);
        let w = vec![1.0; 64];
        let idx: Vec<usize> = (0..64).collect();
        let t = grow_tree(
            &x,
            &idx,
            GrowTarget::Classification { labels: x.labels(), weights: &w, criterion: Criterion::Gini },
            &GrowParams { max_depth: Some(3), min_samples_leaf: 5, ..Default::default() },
        )
        .unwrap();
        assert!(t.depth() <= 3);
        for n in &t.nodes {
            if let TreeNode::Leaf { samples, .. } = n {
                assert!(*samples >= 5);
            }
            if let TreeNode::Split { threshold, .. } = n {
                assert!(threshold.is_finite());
            }
        }
    }

    #[test]
    fn equal_splits_prefer_lowest_feature() {
        // both columns separate the classes perfectly
        let x = matrix(&[vec![0.0, 0.0], vec![1.0, 1.0]], vec![0, 1]);
        let t = classify(&x, Some(1), Criterion::Gini);
        assert!(matches!(t.nodes[0], TreeNode::Split { feature: 0, .. }));
    }

    #[test]
    fn second_order_leaf_values() {
        let x = matrix(&[vec![0.0], vec![1.0], vec![2.0], vec![3.0]], vec![0, 0, 1, 1]);
        let g = [0.5, 0.5, -0.5, -0.5];
        let h = [0.25; 4];
        let idx = [0, 1, 2, 3];
        let t = grow_tree(
            &x,
            &idx,
            GrowTarget::SecondOrder { grad: &g, hess: &h, lambda: 1.0, min_split_loss: 0.0, min_child_weight: 0.0 },
            &GrowParams { max_depth: Some(1), ..Default::default() },
        )
        .unwrap();
        assert!((t.predict(&[0.0]) - (-1.0 / 1.5)).abs() < 1e-12);
        assert!((t.predict(&[3.0]) - (1.0 / 1.5)).abs() < 1e-12);
        // a large split penalty suppresses the split
        let stump = grow_tree(
            &x,
            &idx,
            GrowTarget::SecondOrder { grad: &g, hess: &h, lambda: 1.0, min_split_loss: 10.0, min_child_weight: 0.0 },
            &GrowParams { max_depth: Some(1), ..Default::default() },
        )
        .unwrap();
        assert_eq!(stump.nodes.len(), 1);
    }

    #[test]
    fn empty_input_is_an_error() {
        let x = matrix(&[vec![0.0]], vec![0]);
        let w = [1.0];
        assert!(grow_tree(
            &x,
            &[],
            GrowTarget::Classification { labels: x.labels(), weights: &w, criterion: Criterion::Gini },
            &GrowParams::default()
        )
        .is_err());
    }
}
