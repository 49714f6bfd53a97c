//! L2-regularized logistic regression fitted by damped Newton steps.
//!
//! Objective: `½‖w‖² + C Σ log-loss(y, σ(b + w·x))`; the intercept `b` is
//! not penalized.

use serde::{Deserialize, Serialize};

use crate::data::DesignMatrix;
use crate::error::{Error, Result};
use crate::linalg::Cholesky;
use crate::models::params::LogisticParams;
use crate::select::sigmoid;

const GRADIENT_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogisticModel {
    pub weights: Vec<f64>,
    pub intercept: f64,
}

impl LogisticModel {
    pub fn margin(&self, row: &[f64]) -> f64 {
        self.intercept + row.iter().zip(&self.weights).map(|(a, b)| a * b).sum::<f64>()
    }

    pub fn predict(&self, row: &[f64]) -> f64 {
        sigmoid(self.margin(row))
    }
}

fn log_loss(y: u8, eta: f64) -> f64 {
    // log(1 + e^eta) - y * eta
    let softplus = if eta > 0.0 { eta + (-eta).exp().ln_1p() } else { eta.exp().ln_1p() };
    softplus - f64::from(y) * eta
}

/// Regularized objective at `theta = [b, w...]`.
pub fn objective(x: &DesignMatrix, c: f64, theta: &[f64]) -> f64 {
    let reg = 0.5 * theta[1..].iter().map(|w| w * w).sum::<f64>();
    let loss: f64 = x
        .rows()
        .zip(x.labels())
        .map(|(r, &y)| log_loss(y, theta[0] + r.iter().zip(&theta[1..]).map(|(a, b)| a * b).sum::<f64>()))
        .sum();
    reg + c * loss
}

/// Gradient of [`objective`].
pub fn objective_gradient(x: &DesignMatrix, c: f64, theta: &[f64]) -> Vec<f64> {
    let mut g = vec![0.0; theta.len()];
    for (r, &y) in x.rows().zip(x.labels()) {
        let eta = theta[0] + r.iter().zip(&theta[1..]).map(|(a, b)| a * b).sum::<f64>();
        let resid = sigmoid(eta) - f64::from(y);
        g[0] += c * resid;
        for (gj, xj) in g[1..].iter_mut().zip(r) {
            *gj += c * resid * xj;
        }
    }
    for (gj, wj) in g[1..].iter_mut().zip(&theta[1..]) {
        *gj += wj;
    }
    g
}

fn hessian(x: &DesignMatrix, c: f64, theta: &[f64]) -> Vec<f64> {
    let q = theta.len();
    let mut h = vec![0.0; q * q];
    let mut aug = vec![1.0; q];
    for r in x.rows() {
        aug[1..].copy_from_slice(r);
        let eta: f64 = aug.iter().zip(theta).map(|(a, b)| a * b).sum();
        let mu = sigmoid(eta);
        let w = c * mu * (1.0 - mu);
        for i in 0..q {
            let wi = w * aug[i];
            if wi == 0.0 {
                continue;
            }
            for j in 0..=i {
                h[i * q + j] += wi * aug[j];
            }
        }
    }
    for i in 0..q {
        if i > 0 {
            h[i * q + i] += 1.0;
        }
        for j in 0..i {
            h[j * q + i] = h[i * q + j];
        }
    }
    // keeps the intercept direction invertible when all weights vanish
    h[0] += 1e-12;
    h
}

/// Fits the model and returns the objective value after every accepted step
/// (the first entry is the starting point).
pub fn fit_logistic_traced(x: &DesignMatrix, params: &LogisticParams) -> Result<(LogisticModel, Vec<f64>)> {
    let q = x.n_cols() + 1;
    let (neg, pos) = x.class_counts();
    let mut theta = vec![0.0; q];
    theta[0] = ((pos as f64 + 0.5) / (neg as f64 + 0.5)).ln();
    let mut f = objective(x, params.c, &theta);
    let mut trace = vec![f];
    for _ in 0..params.max_iter {
        let g = objective_gradient(x, params.c, &theta);
        if g.iter().all(|v| v.abs() < GRADIENT_TOL) {
            return Ok((LogisticModel { intercept: theta[0], weights: theta[1..].to_vec() }, trace));
        }
        let h = hessian(x, params.c, &theta);
        let chol = Cholesky::factor(&h, q, 0.0)
            .map_err(|_| Error::Model("logistic Hessian is not positive definite".into()))?;
        let step = chol.solve(&g);
        let mut scale = 1.0;
        let mut moved = false;
        for _ in 0..40 {
            let trial: Vec<f64> = theta.iter().zip(&step).map(|(t, s)| t - scale * s).collect();
            let ft = objective(x, params.c, &trial);
            if ft <= f {
                moved = ft < f || trial != theta;
                theta = trial;
                f = ft;
                break;
            }
            scale *= 0.5;
        }
        if !moved {
            break;
        }
        trace.push(f);
    }
    let g = objective_gradient(x, params.c, &theta);
    let norm = g.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if norm < 1e-6 {
        Ok((LogisticModel { intercept: theta[0], weights: theta[1..].to_vec() }, trace))
    } else {
        Err(Error::NotConverged(format!("logistic gradient norm {norm:.3e} after {} Newton steps", params.max_iter)))
    }
}

pub fn fit_logistic(x: &DesignMatrix, params: &LogisticParams) -> Result<LogisticModel> {
    fit_logistic_traced(x, params).map(|(m, _)| m)
}
