//! Small dense linear-algebra helpers used on the hot paths.
//!
//! The per-observation likelihood needs `ln|R|` and `e' R^-1 e` for an
//! `N x N` matrix thousands of times per objective evaluation, so those are
//! done on flat row-major buffers with an in-place Cholesky factorisation.

use nalgebra::{DMatrix, SymmetricEigen};

/// In-place Cholesky of a row-major `n x n` symmetric matrix stored in `a`.
/// On success the lower triangle holds `L` with `A = L L'`.
pub fn cholesky_in_place(a: &mut [f64], n: usize) -> bool {
    for j in 0..n {
        let mut d = a[j * n + j];
        for k in 0..j {
            d -= a[j * n + k] * a[j * n + k];
        }
        if !(d > 0.0) || !d.is_finite() {
            return false;
        }
        let d = d.sqrt();
        a[j * n + j] = d;
        for i in (j + 1)..n {
            let mut s = a[i * n + j];
            for k in 0..j {
                s -= a[i * n + k] * a[j * n + k];
            }
            a[i * n + j] = s / d;
        }
    }
    true
}

/// Returns `(ln|A|, e' A^-1 e)` for a row-major SPD matrix, or `None` when the
/// factorisation fails. `work` must hold `n*n + n` values.
pub fn logdet_and_quadform(a: &[f64], e: &[f64], n: usize, work: &mut [f64]) -> Option<(f64, f64)> {
    let (l, y) = work.split_at_mut(n * n);
    l.copy_from_slice(&a[..n * n]);
    if !cholesky_in_place(l, n) {
        return None;
    }
    let mut logdet = 0.0;
    let mut quad = 0.0;
    for i in 0..n {
        let mut s = e[i];
        for k in 0..i {
            s -= l[i * n + k] * y[k];
        }
        let lii = l[i * n + i];
        y[i] = s / lii;
        quad += y[i] * y[i];
        logdet += 2.0 * lii.ln();
    }
    Some((logdet, quad))
}

/// `A^-1` for a row-major SPD matrix via its Cholesky factor.
pub fn spd_inverse(a: &[f64], n: usize) -> Option<Vec<f64>> {
    let mut l = a.to_vec();
    if !cholesky_in_place(&mut l, n) {
        return None;
    }
    let mut inv = vec![0.0; n * n];
    let mut col = vec![0.0; n];
    for c in 0..n {
        // forward solve L y = e_c
        for i in 0..n {
            let mut s = if i == c { 1.0 } else { 0.0 };
            for k in 0..i {
                s -= l[i * n + k] * col[k];
            }
            col[i] = s / l[i * n + i];
        }
        // back solve L' x = y
        for i in (0..n).rev() {
            let mut s = col[i];
            for k in (i + 1)..n {
                s -= l[k * n + i] * col[k];
            }
            col[i] = s / l[i * n + i];
        }
        for i in 0..n {
            inv[i * n + c] = col[i];
        }
    }
    Some(inv)
}

pub fn to_row_major(m: &DMatrix<f64>) -> Vec<f64> {
    let n = m.nrows();
    let mut out = Vec::with_capacity(n * m.ncols());
    for i in 0..n {
        for j in 0..m.ncols() {
            out.push(m[(i, j)]);
        }
    }
    out
}

pub fn from_row_major(v: &[f64], n: usize) -> DMatrix<f64> {
    DMatrix::from_row_slice(n, n, v)
}

/// Pearson correlation matrix of the columns of `x` (rows are observations).
pub fn pearson_correlation(x: &DMatrix<f64>) -> DMatrix<f64> {
    let (t, n) = x.shape();
    let means: Vec<f64> = (0..n).map(|j| x.column(j).sum() / t as f64).collect();
    let mut cov = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in i..n {
            let mut s = 0.0;
            for r in 0..t {
                s += (x[(r, i)] - means[i]) * (x[(r, j)] - means[j]);
            }
            cov[(i, j)] = s;
            cov[(j, i)] = s;
        }
    }
    normalize_to_correlation(&cov)
}

/// Correlation implied by the uncentred second moments `(1/T) sum x_t x_t'`.
/// This is the sample correlation used for zero-mean standardized residuals.
pub fn moment_correlation(x: &DMatrix<f64>) -> DMatrix<f64> {
    let n = x.ncols();
    let mut s = DMatrix::zeros(n, n);
    for r in 0..x.nrows() {
        for i in 0..n {
            let xi = x[(r, i)];
            for j in i..n {
                s[(i, j)] += xi * x[(r, j)];
            }
        }
    }
    for i in 0..n {
        for j in 0..i {
            s[(i, j)] = s[(j, i)];
        }
    }
    normalize_to_correlation(&s)
}

/// `D^-1/2 S D^-1/2` with an exact unit diagonal.
pub fn normalize_to_correlation(s: &DMatrix<f64>) -> DMatrix<f64> {
    let n = s.nrows();
    let d: Vec<f64> = (0..n).map(|i| s[(i, i)].sqrt()).collect();
    DMatrix::from_fn(n, n, |i, j| if i == j { 1.0 } else { s[(i, j)] / (d[i] * d[j]) })
}

pub fn min_eigenvalue(m: &DMatrix<f64>) -> f64 {
    let sym = (m + m.transpose()) * 0.5;
    SymmetricEigen::new(sym).eigenvalues.iter().cloned().fold(f64::INFINITY, f64::min)
}

/// Checks symmetry, unit diagonal (both to `tol`) and a strictly positive
/// smallest eigenvalue.
pub fn is_correlation_matrix(m: &DMatrix<f64>, tol: f64) -> bool {
    let n = m.nrows();
    if m.ncols() != n {
        return false;
    }
    for i in 0..n {
        if (m[(i, i)] - 1.0).abs() > tol {
            return false;
        }
        for j in 0..i {
            if (m[(i, j)] - m[(j, i)]).abs() > tol {
                return false;
            }
        }
    }
    min_eigenvalue(m) > 0.0
}
