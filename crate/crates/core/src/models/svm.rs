//! Soft-margin RBF support vector machine.
//!
//! The dual `min ½ αᵀQα − Σα, 0 ≤ α ≤ C, yᵀα = 0` is solved by sequential
//! minimal optimization with second-order working-set selection. Class
//! probabilities come from a Platt sigmoid fitted to the training decision
//! values.

use std::collections::HashMap;
use std::rc::Rc;

use serde::{Deserialize, Serialize};

use crate::data::DesignMatrix;
use crate::error::{Error, Result};
use crate::models::params::{Gamma, SvmParams};

const TAU: f64 = 1e-12;
/// Memory budget for cached kernel rows.
const CACHE_BYTES: usize = 192 << 20;

pub fn rbf(gamma: f64, a: &[f64], b: &[f64]) -> f64 {
    let d2: f64 = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum();
    (-gamma * d2).exp()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SvmModel {
    pub gamma: f64,
    pub support_vectors: Vec<Vec<f64>>,
    /// `α_i y_i` per support vector.
    pub dual_coef: Vec<f64>,
    /// Decision function is `Σ dual_coef_i K(sv_i, x) - rho`.
    pub rho: f64,
    pub platt_a: f64,
    pub platt_b: f64,
}

impl SvmModel {
    pub fn decision(&self, row: &[f64]) -> f64 {
        self.support_vectors
            .iter()
            .zip(&self.dual_coef)
            .map(|(sv, c)| c * rbf(self.gamma, sv, row))
            .sum::<f64>()
            - self.rho
    }

    pub fn predict(&self, row: &[f64]) -> f64 {
        platt_probability(self.platt_a, self.platt_b, self.decision(row))
    }
}

pub fn platt_probability(a: f64, b: f64, decision: f64) -> f64 {
    let f = decision * a + b;
    if f >= 0.0 {
        (-f).exp() / (1.0 + (-f).exp())
    } else {
        1.0 / (1.0 + f.exp())
    }
}

struct KernelRows<'a> {
    x: &'a DesignMatrix,
    gamma: f64,
    norms: Vec<f64>,
    cache: HashMap<usize, (u64, Rc<[f64]>)>,
    capacity: usize,
    clock: u64,
}

impl<'a> KernelRows<'a> {
    fn new(x: &'a DesignMatrix, gamma: f64) -> Self {
        let norms = x.rows().map(|r| r.iter().map(|v| v * v).sum()).collect();
        let capacity = (CACHE_BYTES / (8 * x.n_rows().max(1))).max(2);
        Self { x, gamma, norms, cache: HashMap::new(), capacity, clock: 0 }
    }

    fn row(&mut self, i: usize) -> Rc<[f64]> {
        self.clock += 1;
        if let Some(entry) = self.cache.get_mut(&i) {
            entry.0 = self.clock;
            return entry.1.clone();
        }
        if self.cache.len() >= self.capacity {
            let oldest = *self.cache.iter().min_by_key(|(_, (t, _))| *t).map(|(k, _)| k).expect("non-empty cache");
            self.cache.remove(&oldest);
        }
        let xi = self.x.row(i);
        let ni = self.norms[i];
        let row: Rc<[f64]> = self
            .x
            .rows()
            .zip(&self.norms)
            .map(|(xt, nt)| {
                let dot: f64 = xi.iter().zip(xt).map(|(a, b)| a * b).sum();
                (-self.gamma * (ni + nt - 2.0 * dot).max(0.0)).exp()
            })
            .collect();
        self.cache.insert(i, (self.clock, row.clone()));
        row
    }
}

/// Result of the SMO solve.
#[derive(Debug, Clone)]
pub struct SmoSolution {
    pub alpha: Vec<f64>,
    pub rho: f64,
    pub iterations: usize,
    /// Final maximal KKT violation `m(α) − M(α)`.
    pub kkt_gap: f64,
    /// Dual objective `Σα − ½αᵀQα` after each iteration, when requested.
    pub dual_trace: Vec<f64>,
}

/// Runs SMO on `x` with labels mapped to ±1.
pub fn solve_smo(x: &DesignMatrix, c: f64, gamma: f64, tol: f64, max_iter: usize, trace: bool) -> Result<SmoSolution> {
    let n = x.n_rows();
    let y: Vec<f64> = x.labels().iter().map(|&l| if l == 1 { 1.0 } else { -1.0 }).collect();
    let mut alpha = vec![0.0; n];
    let mut grad = vec![-1.0; n];
    let mut kernel = KernelRows::new(x, gamma);
    let mut dual_trace = Vec::new();
    let upper = |a: f64| a >= c;
    let lower = |a: f64| a <= 0.0;
    let mut iterations = 0;
    let kkt_gap;
    loop {
        // i: maximal violating index in I_up
        let mut gmax = f64::NEG_INFINITY;
        let mut i_sel = None;
        for t in 0..n {
            let in_up = if y[t] > 0.0 { !upper(alpha[t]) } else { !lower(alpha[t]) };
            if in_up && -y[t] * grad[t] >= gmax {
                gmax = -y[t] * grad[t];
                i_sel = Some(t);
            }
        }
        let Some(i) = i_sel else {
            kkt_gap = 0.0;
            break;
        };
        let qi = kernel.row(i);
        let mut gmax2 = f64::NEG_INFINITY;
        let mut j_sel = None;
        let mut obj_min = f64::INFINITY;
        for t in 0..n {
            let in_low = if y[t] > 0.0 { !lower(alpha[t]) } else { !upper(alpha[t]) };
            if !in_low {
                continue;
            }
            let v = y[t] * grad[t];
            gmax2 = gmax2.max(v);
            let diff = gmax + v;
            if diff > 0.0 {
                let mut quad = 2.0 - 2.0 * qi[t];
                if quad <= 0.0 {
                    quad = TAU;
                }
                let obj = -(diff * diff) / quad;
                if obj <= obj_min {
                    obj_min = obj;
                    j_sel = Some(t);
                }
            }
        }
        if gmax + gmax2 < tol || j_sel.is_none() {
            kkt_gap = (gmax + gmax2).max(0.0);
            break;
        }
        if iterations >= max_iter {
            return Err(Error::NotConverged(format!(
                "SMO reached {max_iter} iterations with KKT gap {:.3e}",
                gmax + gmax2
            )));
        }
        iterations += 1;
        let j = j_sel.expect("checked above");
        let qj = kernel.row(j);
        let (old_i, old_j) = (alpha[i], alpha[j]);
        let kij = qi[j];
        if y[i] != y[j] {
            let mut quad = 2.0 + 2.0 * (-kij);
            if quad <= 0.0 {
                quad = TAU;
            }
            // Q_ij = y_i y_j K_ij = -K_ij here
            let delta = (-grad[i] - grad[j]) / quad;
            let diff = alpha[i] - alpha[j];
            alpha[i] += delta;
            alpha[j] += delta;
            if diff > 0.0 {
                if alpha[j] < 0.0 {
                    alpha[j] = 0.0;
                    alpha[i] = diff;
                }
            } else if alpha[i] < 0.0 {
                alpha[i] = 0.0;
                alpha[j] = -diff;
            }
            if diff > 0.0 {
                if alpha[i] > c {
                    alpha[i] = c;
                    alpha[j] = c - diff;
                }
            } else if alpha[j] > c {
                alpha[j] = c;
                alpha[i] = c + diff;
            }
        } else {
            let mut quad = 2.0 - 2.0 * kij;
            if quad <= 0.0 {
                quad = TAU;
            }
            let delta = (grad[i] - grad[j]) / quad;
            let sum = alpha[i] + alpha[j];
            alpha[i] -= delta;
            alpha[j] += delta;
            if sum > c {
                if alpha[i] > c {
                    alpha[i] = c;
                    alpha[j] = sum - c;
                }
            } else if alpha[j] < 0.0 {
                alpha[j] = 0.0;
                alpha[i] = sum;
            }
            if sum > c {
                if alpha[j] > c {
                    alpha[j] = c;
                    alpha[i] = sum - c;
                }
            } else if alpha[i] < 0.0 {
                alpha[i] = 0.0;
                alpha[j] = sum;
            }
        }
        let di = (alpha[i] - old_i) * y[i];
        let dj = (alpha[j] - old_j) * y[j];
        for t in 0..n {
            grad[t] += y[t] * (qi[t] * di + qj[t] * dj);
        }
        if trace {
            let f: f64 = alpha.iter().zip(&grad).map(|(a, g)| a * (g - 1.0)).sum::<f64>() * 0.5;
            dual_trace.push(-f);
        }
    }

    let (mut ub, mut lb) = (f64::INFINITY, f64::NEG_INFINITY);
    let (mut free, mut sum_free) = (0usize, 0.0);
    for t in 0..n {
        let yg = y[t] * grad[t];
        if upper(alpha[t]) {
            if y[t] < 0.0 {
                ub = ub.min(yg);
            } else {
                lb = lb.max(yg);
            }
        } else if lower(alpha[t]) {
            if y[t] > 0.0 {
                ub = ub.min(yg);
            } else {
                lb = lb.max(yg);
            }
        } else {
            free += 1;
            sum_free += yg;
        }
    }
    let rho = if free > 0 { sum_free / free as f64 } else { 0.5 * (ub + lb) };
    Ok(SmoSolution { alpha, rho, iterations, kkt_gap, dual_trace })
}

/// Platt sigmoid fit (Newton with backtracking on the regularized targets).
/// Returns `(A, B)` with `P(y = 1 | f) = 1 / (1 + exp(A f + B))`.
pub fn fit_platt(decisions: &[f64], labels: &[u8]) -> (f64, f64) {
    let prior1 = labels.iter().filter(|&&l| l == 1).count() as f64;
    let prior0 = labels.len() as f64 - prior1;
    let hi = (prior1 + 1.0) / (prior1 + 2.0);
    let lo = 1.0 / (prior0 + 2.0);
    let t: Vec<f64> = labels.iter().map(|&l| if l == 1 { hi } else { lo }).collect();
    let (max_iter, min_step, sigma, eps) = (100, 1e-10, 1e-12, 1e-5);
    let mut a = 0.0;
    let mut b = ((prior0 + 1.0) / (prior1 + 1.0)).ln();
    let fval_at = |a: f64, b: f64| -> f64 {
        decisions
            .iter()
            .zip(&t)
            .map(|(d, ti)| {
                let f = d * a + b;
                if f >= 0.0 {
                    ti * f + (-f).exp().ln_1p()
                } else {
                    (ti - 1.0) * f + f.exp().ln_1p()
                }
            })
            .sum()
    };
    let mut fval = fval_at(a, b);
    for _ in 0..max_iter {
        let (mut h11, mut h22, mut h21, mut g1, mut g2) = (sigma, sigma, 0.0, 0.0, 0.0);
        for (d, ti) in decisions.iter().zip(&t) {
            let f = d * a + b;
            let (p, q) = if f >= 0.0 {
                let e = (-f).exp();
                (e / (1.0 + e), 1.0 / (1.0 + e))
            } else {
                let e = f.exp();
                (1.0 / (1.0 + e), e / (1.0 + e))
            };
            let d2 = p * q;
            h11 += d * d * d2;
            h22 += d2;
            h21 += d * d2;
            let d1 = ti - p;
            g1 += d * d1;
            g2 += d1;
        }
        if g1.abs() < eps && g2.abs() < eps {
            break;
        }
        let det = h11 * h22 - h21 * h21;
        let da = -(h22 * g1 - h21 * g2) / det;
        let db = -(-h21 * g1 + h11 * g2) / det;
        let gd = g1 * da + g2 * db;
        let mut step = 1.0;
        while step >= min_step {
            let (na, nb) = (a + step * da, b + step * db);
            let nf = fval_at(na, nb);
            if nf < fval + 1e-4 * step * gd {
                a = na;
                b = nb;
                fval = nf;
                break;
            }
            step /= 2.0;
        }
        if step < min_step {
            break;
        }
    }
    (a, b)
}

pub fn resolve_gamma(gamma: Gamma, x: &DesignMatrix) -> f64 {
    let p = x.n_cols().max(1) as f64;
    match gamma {
        Gamma::Auto => 1.0 / p,
        Gamma::Scale => {
            let v = x.values();
            let n = v.len() as f64;
            let mean = v.iter().sum::<f64>() / n;
            let var = v.iter().map(|a| (a - mean).powi(2)).sum::<f64>() / n;
            if var > 0.0 {
                1.0 / (p * var)
            } else {
                1.0
            }
        }
        Gamma::Value(g) => g,
    }
}

pub fn fit_svm_traced(x: &DesignMatrix, params: &SvmParams, trace: bool) -> Result<(SvmModel, SmoSolution)> {
    let gamma = resolve_gamma(params.gamma, x);
    let max_iter = params.max_iter.unwrap_or_else(|| (100 * x.n_rows()).max(1_000_000));
    let sol = solve_smo(x, params.c, gamma, params.tol, max_iter, trace)?;
    let y: Vec<f64> = x.labels().iter().map(|&l| if l == 1 { 1.0 } else { -1.0 }).collect();
    let mut support_vectors = Vec::new();
    let mut dual_coef = Vec::new();
    for (i, &a) in sol.alpha.iter().enumerate() {
        if a > 0.0 {
            support_vectors.push(x.row(i).to_vec());
            dual_coef.push(a * y[i]);
        }
    }
    let mut model = SvmModel { gamma, support_vectors, dual_coef, rho: sol.rho, platt_a: 0.0, platt_b: 0.0 };
    let decisions: Vec<f64> = x.rows().map(|r| model.decision(r)).collect();
    let (a, b) = fit_platt(&decisions, x.labels());
    model.platt_a = a;
    model.platt_b = b;
    Ok((model, sol))
}

pub fn fit_svm(x: &DesignMatrix, params: &SvmParams) -> Result<SvmModel> {
    fit_svm_traced(x, params, false).map(|(m, _)| m)
}
