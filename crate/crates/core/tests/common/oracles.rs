#![allow(dead_code)]
//! Independent reference implementations used only by tests.

use severity_core::DesignMatrix;

/// Solves `a x = b` by Gaussian elimination with partial pivoting.
pub fn gauss_solve(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Vec<f64> {
    let n = b.len();
    for col in 0..n {
        let piv = (col..n).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs())).unwrap();
        a.swap(col, piv);
        b.swap(col, piv);
        for r in col + 1..n {
            let f = a[r][col] / a[col][col];
            for c in col..n {
                a[r][c] -= f * a[col][c];
            }
            b[r] -= f * b[col];
        }
    }
    let mut x = vec![0.0; n];
    for r in (0..n).rev() {
        let s: f64 = (r + 1..n).map(|c| a[r][c] * x[c]).sum();
        x[r] = (b[r] - s) / a[r][r];
    }
    x
}

/// Plain Newton-Raphson maximum likelihood for logistic regression.
/// Returns `[intercept, coefficients...]`.
pub fn newton_logit(x: &DesignMatrix) -> Vec<f64> {
    let p = x.n_cols() + 1;
    let mut beta = vec![0.0; p];
    for _ in 0..200 {
        let mut grad = vec![0.0; p];
        let mut hess = vec![vec![0.0; p]; p];
        for (row, &y) in x.rows().zip(x.labels()) {
            let z: Vec<f64> = std::iter::once(1.0).chain(row.iter().copied()).collect();
            let eta: f64 = z.iter().zip(&beta).map(|(a, b)| a * b).sum();
            let mu = 1.0 / (1.0 + (-eta).exp());
            for i in 0..p {
                grad[i] += (f64::from(y) - mu) * z[i];
                for j in 0..p {
                    hess[i][j] += mu * (1.0 - mu) * z[i] * z[j];
                }
            }
        }
        let step = gauss_solve(hess, grad);
        for (b, s) in beta.iter_mut().zip(&step) {
            *b += s;
        }
        if step.iter().all(|s| s.abs() < 1e-13) {
            break;
        }
    }
    beta
}

/// Probability a random positive outscores a random negative, ties counted half.
pub fn mann_whitney(labels: &[u8], scores: &[f64]) -> f64 {
    let mut num = 0.0;
    let (mut pos, mut neg) = (0usize, 0usize);
    for (i, &li) in labels.iter().enumerate() {
        if li == 1 {
            pos += 1;
        } else {
            neg += 1;
            continue;
        }
        for (j, &lj) in labels.iter().enumerate() {
            if lj == 0 {
                num += if scores[i] > scores[j] {
                    1.0
                } else if scores[i] == scores[j] {
                    0.5
                } else {
                    0.0
                };
            }
        }
    }
    num / (pos * neg) as f64
}

/// Distance from `q` to the segment `a`-`b`, and the interpolation parameter.
pub fn segment_residual(q: &[f64], a: &[f64], b: &[f64]) -> (f64, f64) {
    let d: Vec<f64> = a.iter().zip(b).map(|(u, v)| v - u).collect();
    let dd: f64 = d.iter().map(|v| v * v).sum();
    let t = if dd == 0.0 {
        0.0
    } else {
        q.iter().zip(a).zip(&d).map(|((qi, ai), di)| (qi - ai) * di).sum::<f64>() / dd
    };
    let res = q
        .iter()
        .zip(a)
        .zip(&d)
        .map(|((qi, ai), di)| (qi - ai - t * di).powi(2))
        .sum::<f64>()
        .sqrt();
    (res, t)
}

/// Brute-force interventional Shapley values, written independently of the library.
pub fn shapley_enumerate(f: &dyn Fn(&[f64]) -> f64, row: &[f64], background: &[Vec<f64>]) -> Vec<f64> {
    let p = row.len();
    let value = |mask: usize| -> f64 {
        background
            .iter()
            .map(|b| {
                let h: Vec<f64> = (0..p).map(|j| if mask >> j & 1 == 1 { row[j] } else { b[j] }).collect();
                f(&h)
            })
            .sum::<f64>()
            / background.len() as f64
    };
    let v: Vec<f64> = (0..1usize << p).map(value).collect();
    let fact: Vec<f64> = (0..=p).scan(1.0, |acc, k| {
        let out = *acc;
        *acc *= (k + 1) as f64;
        Some(out)
    }).collect();
    (0..p)
        .map(|j| {
            (0..1usize << p)
                .filter(|m| m >> j & 1 == 0)
                .map(|m| {
                    let s = m.count_ones() as usize;
                    fact[s] * fact[p - s - 1] / fact[p] * (v[m | 1 << j] - v[m])
                })
                .sum()
        })
        .collect()
}
