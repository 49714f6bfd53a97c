//! Unregularized logistic regression with Wald statistics, and
//! significance-based feature selection.

use std::path::Path;

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::data::DesignMatrix;
use crate::error::{Error, Result};
use crate::linalg::Cholesky;

/// Ridge added to the information matrix before each Newton solve.
pub const INFORMATION_RIDGE: f64 = 1e-8;
/// Any |coefficient| beyond this marks the fit as (quasi-)separated.
pub const SEPARATION_BOUND: f64 = 20.0;
const SINGULAR_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy)]
pub struct LogitOptions {
    pub max_iter: usize,
    pub tol: f64,
}

impl Default for LogitOptions {
    fn default() -> Self {
        Self { max_iter: 100, tol: 1e-8 }
    }
}

/// Fitted coefficients with Wald statistics. Vectors are indexed like
/// `column_names`; the intercept is kept separately.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogitFit {
    pub column_names: Vec<String>,
    pub coefficients: Vec<f64>,
    pub standard_errors: Vec<f64>,
    pub z_scores: Vec<f64>,
    pub p_values: Vec<f64>,
    /// 95% Wald interval.
    pub ci95_low: Vec<f64>,
    pub ci95_high: Vec<f64>,
    /// 90% Wald interval, the one used for selection.
    pub ci90_low: Vec<f64>,
    pub ci90_high: Vec<f64>,
    pub intercept: f64,
    pub intercept_se: f64,
    pub log_likelihood: f64,
    pub gradient_norm: f64,
    pub converged: bool,
    pub iterations: usize,
}

fn std_normal() -> Normal {
    Normal::new(0.0, 1.0).expect("unit normal")
}

/// Two-sided normal critical value for a `level` confidence interval.
pub fn critical_value(level: f64) -> f64 {
    std_normal().inverse_cdf(0.5 + level / 2.0)
}

/// Wald interval `coef ± z·se` at confidence `level`.
pub fn wald_interval(coef: f64, se: f64, level: f64) -> (f64, f64) {
    let z = critical_value(level);
    (coef - z * se, coef + z * se)
}

/// Two-sided p-value of a Wald z statistic.
pub fn two_sided_p(z: f64) -> f64 {
    (2.0 * std_normal().cdf(-z.abs())).min(1.0)
}

fn log1p_exp(x: f64) -> f64 {
    if x > 0.0 {
        x + (-x).exp().ln_1p()
    } else {
        x.exp().ln_1p()
    }
}

pub(crate) fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// Parameter layout: `beta[0]` is the intercept, `beta[1..]` follow the columns.
pub fn log_likelihood(x: &DesignMatrix, beta: &[f64]) -> f64 {
    x.rows()
        .zip(x.labels())
        .map(|(r, &y)| {
            let eta = beta[0] + r.iter().zip(&beta[1..]).map(|(a, b)| a * b).sum::<f64>();
            f64::from(y) * eta - log1p_exp(eta)
        })
        .sum()
}

/// Gradient of [`log_likelihood`] with the same parameter layout.
pub fn log_likelihood_gradient(x: &DesignMatrix, beta: &[f64]) -> Vec<f64> {
    let mut g = vec![0.0; beta.len()];
    for (r, &y) in x.rows().zip(x.labels()) {
        let eta = beta[0] + r.iter().zip(&beta[1..]).map(|(a, b)| a * b).sum::<f64>();
        let resid = f64::from(y) - sigmoid(eta);
        g[0] += resid;
        for (gj, xj) in g[1..].iter_mut().zip(r) {
            *gj += resid * xj;
        }
    }
    g
}

/// Observed information `Xᵀ W X` (intercept-augmented), row-major.
fn information(x: &DesignMatrix, beta: &[f64]) -> Vec<f64> {
    let q = beta.len();
    let mut info = vec![0.0; q * q];
    let mut aug = vec![1.0; q];
    for r in x.rows() {
        aug[1..].copy_from_slice(r);
        let eta: f64 = aug.iter().zip(beta).map(|(a, b)| a * b).sum();
        let mu = sigmoid(eta);
        let w = mu * (1.0 - mu);
        for i in 0..q {
            let wi = w * aug[i];
            if wi == 0.0 {
                continue;
            }
            for j in 0..=i {
                info[i * q + j] += wi * aug[j];
            }
        }
    }
    for i in 0..q {
        for j in 0..i {
            info[j * q + i] = info[i * q + j];
        }
    }
    info
}

fn augmented_names(x: &DesignMatrix) -> Vec<String> {
    std::iter::once("intercept".to_string()).chain(x.column_names().iter().cloned()).collect()
}

fn check_collinearity(x: &DesignMatrix) -> Result<()> {
    let q = x.n_cols() + 1;
    let mut gram = vec![0.0; q * q];
    let mut aug = vec![1.0; q];
    for r in x.rows() {
        aug[1..].copy_from_slice(r);
        for i in 0..q {
            for j in 0..q {
                gram[i * q + j] += aug[i] * aug[j];
            }
        }
    }
    let bad = Cholesky::degenerate_pivots(&gram, q, SINGULAR_TOL);
    if bad.is_empty() {
        Ok(())
    } else {
        let names = augmented_names(x);
        Err(Error::Singular(bad.into_iter().map(|i| names[i].clone()).collect()))
    }
}

/// Maximum-likelihood logistic regression by Newton's method (IRLS) with
/// step halving, followed by Wald statistics from the inverse observed
/// information.
///
/// A fit that exhausts `max_iter` or whose coefficients run past
/// [`SEPARATION_BOUND`] is returned with `converged == false`.
pub fn fit_logit_wald(x: &DesignMatrix, options: &LogitOptions) -> Result<LogitFit> {
    let (n, p) = (x.n_rows(), x.n_cols());
    if n <= p + 1 {
        return Err(Error::Data(format!("logit needs more rows ({n}) than parameters ({})", p + 1)));
    }
    let (neg, pos) = x.class_counts();
    if neg == 0 || pos == 0 {
        return Err(Error::Data("logit needs both classes".into()));
    }
    for j in 0..p {
        let first = x.get(0, j);
        if x.rows().all(|r| r[j] == first) {
            return Err(Error::Data(format!("column `{}` is constant", x.column_names()[j])));
        }
    }
    check_collinearity(x)?;

    let q = p + 1;
    let mut beta = vec![0.0; q];
    let rate = pos as f64 / n as f64;
    beta[0] = (rate / (1.0 - rate)).ln();
    let mut ll = log_likelihood(x, &beta);
    let mut converged = false;
    let mut iterations = 0;
    let mut grad = log_likelihood_gradient(x, &beta);
    let mut separated = false;
    while iterations < options.max_iter {
        if inf_norm(&grad) < options.tol {
            converged = true;
            break;
        }
        iterations += 1;
        let mut info = information(x, &beta);
        for i in 0..q {
            info[i * q + i] += INFORMATION_RIDGE;
        }
        let chol = Cholesky::factor(&info, q, 0.0).map_err(|e| {
            Error::Singular(vec![augmented_names(x)[e.pivot].clone()])
        })?;
        let step = chol.solve(&grad);
        let mut scale = 1.0;
        let mut accepted = false;
        for _ in 0..30 {
            let trial: Vec<f64> = beta.iter().zip(&step).map(|(b, s)| b + scale * s).collect();
            let trial_ll = log_likelihood(x, &trial);
            if trial_ll >= ll - 1e-12 * ll.abs() {
                beta = trial;
                ll = trial_ll;
                accepted = true;
                break;
            }
            scale *= 0.5;
        }
        grad = log_likelihood_gradient(x, &beta);
        if !accepted {
            break;
        }
        if beta.iter().any(|b| b.abs() > SEPARATION_BOUND) {
            separated = true;
            break;
        }
    }
    if !converged && !separated && inf_norm(&grad) < options.tol {
        converged = true;
    }
    if separated {
        log::warn!("logit coefficients exceeded {SEPARATION_BOUND}: quasi-separation");
    }

    let info = information(x, &beta);
    let mut ridged = info.clone();
    for i in 0..q {
        ridged[i * q + i] += INFORMATION_RIDGE;
    }
    let chol = Cholesky::factor(&info, q, 1e-14)
        .or_else(|_| Cholesky::factor(&ridged, q, 0.0))
        .map_err(|e| Error::Singular(vec![augmented_names(x)[e.pivot].clone()]))?;
    let se: Vec<f64> = chol.inverse_diagonal().into_iter().map(|v| v.max(0.0).sqrt()).collect();

    let coefs = beta[1..].to_vec();
    let ses = se[1..].to_vec();
    let z: Vec<f64> = coefs.iter().zip(&ses).map(|(c, s)| c / s).collect();
    let (ci95, ci90): (Vec<_>, Vec<_>) =
        coefs.iter().zip(&ses).map(|(&c, &s)| (wald_interval(c, s, 0.95), wald_interval(c, s, 0.90))).unzip();
    Ok(LogitFit {
        column_names: x.column_names().to_vec(),
        p_values: z.iter().map(|&v| two_sided_p(v)).collect(),
        ci95_low: ci95.iter().map(|i| i.0).collect(),
        ci95_high: ci95.iter().map(|i| i.1).collect(),
        ci90_low: ci90.iter().map(|i| i.0).collect(),
        ci90_high: ci90.iter().map(|i| i.1).collect(),
        z_scores: z,
        coefficients: coefs,
        standard_errors: ses,
        intercept: beta[0],
        intercept_se: se[0],
        log_likelihood: ll,
        gradient_norm: inf_norm(&grad),
        converged: converged && !separated,
        iterations,
    })
}

fn inf_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

/// Columns retained and dropped at significance level `alpha`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectionReport {
    pub kept: Vec<String>,
    /// Dropped columns with their p-values.
    pub dropped: Vec<(String, f64)>,
    pub alpha: f64,
}

/// Keeps exactly the columns whose two-sided Wald p-value is below `alpha`,
/// in their original order.
pub fn select_significant(fit: &LogitFit, alpha: f64) -> Result<SelectionReport> {
    if !fit.converged {
        return Err(Error::NotConverged(format!(
            "selection needs a converged logit fit ({} iterations, gradient {:.3e})",
            fit.iterations, fit.gradient_norm
        )));
    }
    if !(alpha > 0.0 && alpha <= 1.0) {
        return Err(Error::Config(format!("alpha {alpha} outside (0, 1]")));
    }
    let mut kept = Vec::new();
    let mut dropped = Vec::new();
    for (name, &p) in fit.column_names.iter().zip(&fit.p_values) {
        if p < alpha {
            kept.push(name.clone());
        } else {
            dropped.push((name.clone(), p));
        }
    }
    Ok(SelectionReport { kept, dropped, alpha })
}

/// Writes the coefficient table: `Features, Coef., Std. Err., z, P>|z|`,
/// the 95% bounds `[0.025, 0.975]`, the 90% bounds `[0.05, 0.95]`, and
/// whether the column was selected.
pub fn write_selection_csv(fit: &LogitFit, report: &SelectionReport, path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["Features", "Coef.", "Std. Err.", "z", "P>|z|", "[0.025", "0.975]", "[0.05", "0.95]", "selected"])?;
    for j in 0..fit.column_names.len() {
        let name = &fit.column_names[j];
        w.write_record([
            name.clone(),
            format!("{:.6}", fit.coefficients[j]),
            format!("{:.6}", fit.standard_errors[j]),
            format!("{:.6}", fit.z_scores[j]),
            format!("{:.6e}", fit.p_values[j]),
            format!("{:.6}", fit.ci95_low[j]),
            format!("{:.6}", fit.ci95_high[j]),
            format!("{:.6}", fit.ci90_low[j]),
            format!("{:.6}", fit.ci90_high[j]),
            report.kept.contains(name).to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}
