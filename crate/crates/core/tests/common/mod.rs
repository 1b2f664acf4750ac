//! Independent reference implementations used by the integration tests.
//! Everything here is written directly from the model equations with plain
//! nalgebra operations (explicit inverses and determinants), sharing no
//! code with the library's recursions.
#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use condcorr::corrmodels::DccParams;
use condcorr::garch::GjrParams;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn normal(rng: &mut ChaCha8Rng) -> f64 {
    // Box-Muller keeps the oracle independent of rand_distr
    let u1: f64 = rng.random::<f64>().max(1e-300);
    let u2: f64 = rng.random();
    (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
}

pub fn normal_matrix(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> DMatrix<f64> {
    DMatrix::from_fn(rows, cols, |_, _| normal(rng))
}

/// Random correlation matrix from a normalized Gram matrix.
pub fn random_correlation(rng: &mut ChaCha8Rng, n: usize) -> DMatrix<f64> {
    let a = normal_matrix(rng, n, n + 2);
    let s = &a * a.transpose();
    DMatrix::from_fn(n, n, |i, j| if i == j { 1.0 } else { s[(i, j)] / (s[(i, i)] * s[(j, j)]).sqrt() })
}

/// Random symmetric positive definite matrix.
pub fn random_spd(rng: &mut ChaCha8Rng, n: usize) -> DMatrix<f64> {
    let a = normal_matrix(rng, n, n);
    &a * a.transpose() + DMatrix::identity(n, n) * 0.5
}

pub fn constant_correlation(n: usize, rho: f64) -> DMatrix<f64> {
    DMatrix::from_fn(n, n, |i, j| if i == j { 1.0 } else { rho })
}

/// `h_1 = h0`, `h_t = w + (a + g 1[r_{t-1} < 0]) r_{t-1}^2 + b h_{t-1}`.
pub fn naive_gjr(p: &GjrParams, r: &[f64], h0: f64) -> Vec<f64> {
    let mut h = vec![h0];
    for t in 1..r.len() {
        let neg = if r[t - 1] < 0.0 { 1.0 } else { 0.0 };
        h.push(p.omega + p.alpha * r[t - 1].powi(2) + p.gamma * neg * r[t - 1].powi(2) + p.beta * h[t - 1]);
    }
    h
}

/// cDCC loop written from the recursion with explicit matrix products.
pub fn naive_dcc(
    p: &DccParams,
    eps: &DMatrix<f64>,
    x: Option<&[f64]>,
    d: Option<&[u8]>,
    xbar: f64,
    rbar: &DMatrix<f64>,
) -> (Vec<DMatrix<f64>>, Vec<DMatrix<f64>>) {
    let (t_len, n) = eps.shape();
    let mut qs = vec![rbar.clone()];
    for t in 1..t_len {
        let k = match d {
            Some(d) if d[t] == 0 => 1,
            _ => 0,
        };
        let q_prev = &qs[t - 1];
        let qt_prev = DMatrix::from_fn(n, n, |i, j| if i == j { q_prev[(i, i)].sqrt() } else { 0.0 });
        let e: DVector<f64> = eps.row(t - 1).transpose();
        let shock = &qt_prev * &e * e.transpose() * &qt_prev;
        let x_lag = x.map(|x| x[t - 1]).unwrap_or(0.0);
        let q = rbar * (1.0 - p.a[k] - p.b[k] - p.psi[k] * xbar)
            + shock * p.a[k]
            + q_prev * p.b[k]
            + rbar * (p.psi[k] * x_lag);
        qs.push(q);
    }
    let rs = qs.iter().map(normalize).collect();
    (qs, rs)
}

pub fn normalize(q: &DMatrix<f64>) -> DMatrix<f64> {
    let n = q.nrows();
    let s = DMatrix::from_fn(n, n, |i, j| if i == j { 1.0 / q[(i, i)].sqrt() } else { 0.0 });
    &s * q * &s
}

/// `-(TN/2) ln 2pi - 1/2 sum (ln|R_t| + e_t' R_t^-1 e_t)` by explicit
/// determinant and inverse.
pub fn naive_loglik(rs: &[DMatrix<f64>], eps: &DMatrix<f64>) -> f64 {
    let (t_len, n) = eps.shape();
    let mut ll = -0.5 * (t_len * n) as f64 * (2.0 * std::f64::consts::PI).ln();
    for (t, r) in rs.iter().enumerate() {
        let e: DVector<f64> = eps.row(t).transpose();
        let inv = r.clone().try_inverse().expect("invertible");
        ll -= 0.5 * (r.determinant().ln() + (e.transpose() * inv * &e)[(0, 0)]);
    }
    ll
}

/// Per-step QLike `ln|H| + trace(H^-1 r r')`.
pub fn naive_qlike(h: &DMatrix<f64>, r: &DVector<f64>) -> f64 {
    let inv = h.clone().try_inverse().expect("invertible");
    h.determinant().ln() + (inv * (r * r.transpose())).trace()
}

/// Per-step GMV variance `v' H v` with `v = sqrt(n) H^-1 j / (j' H^-1 j)`.
pub fn naive_gmv(h: &DMatrix<f64>) -> f64 {
    let n = h.nrows();
    let inv = h.clone().try_inverse().expect("invertible");
    let j = DVector::from_element(n, 1.0);
    let denom = (j.transpose() * &inv * &j)[(0, 0)];
    let v = (&inv * &j) * ((n as f64).sqrt() / denom);
    (v.transpose() * h * &v)[(0, 0)]
}

pub fn sample_correlation(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    let syy: f64 = y.iter().map(|b| (b - my).powi(2)).sum();
    sxy / (sxx * syy).sqrt()
}

pub fn min_eigenvalue(m: &DMatrix<f64>) -> f64 {
    m.clone().symmetric_eigen().eigenvalues.min()
}
