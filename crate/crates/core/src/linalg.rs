//! Small dense symmetric solvers for the Newton iterations.
//!
//! Matrices are row-major `Vec<f64>` of size `n * n`.

/// Lower-triangular Cholesky factor of a symmetric positive definite matrix.
#[derive(Debug, Clone)]
pub struct Cholesky {
    n: usize,
    lower: Vec<f64>,
}

/// Failure of the factorization: the index of the first pivot that was not
/// positive relative to the matrix scale.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct NotPositiveDefinite {
    pub pivot: usize,
}

impl Cholesky {
    /// Factors `a`. A pivot below `rel_tol * max(diag)` is treated as zero.
    pub fn factor(a: &[f64], n: usize, rel_tol: f64) -> Result<Self, NotPositiveDefinite> {
        assert_eq!(a.len(), n * n);
        let scale = (0..n).map(|i| a[i * n + i].abs()).fold(0.0, f64::max).max(f64::MIN_POSITIVE);
        let mut l = vec![0.0; n * n];
        for j in 0..n {
            let mut d = a[j * n + j];
            for k in 0..j {
                d -= l[j * n + k] * l[j * n + k];
            }
            if !(d > rel_tol * scale) {
                return Err(NotPositiveDefinite { pivot: j });
            }
            let d = d.sqrt();
            l[j * n + j] = d;
            for i in (j + 1)..n {
                let mut s = a[i * n + j];
                for k in 0..j {
                    s -= l[i * n + k] * l[j * n + k];
                }
                l[i * n + j] = s / d;
            }
        }
        Ok(Self { n, lower: l })
    }

    /// Indices of pivots that collapse when factoring `a`: each such column
    /// is (numerically) a linear combination of the columns before it.
    pub fn degenerate_pivots(a: &[f64], n: usize, rel_tol: f64) -> Vec<usize> {
        let scale = (0..n).map(|i| a[i * n + i].abs()).fold(0.0, f64::max).max(f64::MIN_POSITIVE);
        let mut l = vec![0.0; n * n];
        let mut bad = Vec::new();
        for j in 0..n {
            let mut d = a[j * n + j];
            for k in 0..j {
                d -= l[j * n + k] * l[j * n + k];
            }
            if !(d > rel_tol * scale) {
                // drop the column from the factor and keep going
                bad.push(j);
                continue;
            }
            let d = d.sqrt();
            l[j * n + j] = d;
            for i in (j + 1)..n {
                let mut s = a[i * n + j];
                for k in 0..j {
                    s -= l[i * n + k] * l[j * n + k];
                }
                l[i * n + j] = s / d;
            }
        }
        bad
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let n = self.n;
        let l = &self.lower;
        let mut y = b.to_vec();
        for i in 0..n {
            let mut s = y[i];
            for k in 0..i {
                s -= l[i * n + k] * y[k];
            }
            y[i] = s / l[i * n + i];
        }
        for i in (0..n).rev() {
            let mut s = y[i];
            for k in (i + 1)..n {
                s -= l[k * n + i] * y[k];
            }
            y[i] = s / l[i * n + i];
        }
        y
    }

    /// Diagonal of the inverse matrix.
    pub fn inverse_diagonal(&self) -> Vec<f64> {
        let n = self.n;
        let mut diag = vec![0.0; n];
        let mut e = vec![0.0; n];
        for j in 0..n {
            e.iter_mut().for_each(|v| *v = 0.0);
            e[j] = 1.0;
            diag[j] = self.solve(&e)[j];
        }
        diag
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn solves_spd_system() {
        let a = [4.0, 2.0, 0.6, 2.0, 5.0, 1.0, 0.6, 1.0, 3.0];
        let chol = Cholesky::factor(&a, 3, 1e-12).unwrap();
        let x = chol.solve(&[1.0, 2.0, 3.0]);
        for i in 0..3 {
            let r: f64 = (0..3).map(|k| a[i * 3 + k] * x[k]).sum();
            assert!((r - [1.0, 2.0, 3.0][i]).abs() < 1e-12);
        }
        let inv = chol.inverse_diagonal();
        let e0 = chol.solve(&[1.0, 0.0, 0.0]);
        assert!((inv[0] - e0[0]).abs() < 1e-15);
    }

    #[test]
    fn flags_collinear_column() {
        // third column = first + second
        let cols = [[1.0, 0.0, 1.0, 2.0], [0.0, 1.0, 1.0, 0.5]];
        let mut x = vec![[0.0; 3]; 4];
        for r in 0..4 {
            x[r] = [cols[0][r], cols[1][r], cols[0][r] + cols[1][r]];
        }
        let mut a = vec![0.0; 9];
        for row in &x {
            for i in 0..3 {
                for j in 0..3 {
                    a[i * 3 + j] += row[i] * row[j];
                }
            }
        }
        assert_eq!(Cholesky::factor(&a, 3, 1e-10).unwrap_err().pivot, 2);
        assert_eq!(Cholesky::degenerate_pivots(&a, 3, 1e-10), vec![2]);
    }
}
