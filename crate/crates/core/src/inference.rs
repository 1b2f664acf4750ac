//! Robust standard errors, residual diagnostics, specification tests and
//! information criteria.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;
use statrs::distribution::{ChiSquared, ContinuousCDF};

use crate::corrmodels::{lower_pairs, CorrFitResult, CorrInputs, CorrParams, ModelKind};
use crate::error::{Error, Result};
use crate::linalg;

/// Relative finite-difference step for scores and Hessians.
const SE_STEP: f64 = 1e-4;

/// Sandwich covariance `H^-1 S H^-1` and the plain inverse-Hessian
/// covariance, both in the parameter space given to [`robust_covariance`].
#[derive(Debug, Clone)]
pub struct RobustCovariance {
    pub cov: DMatrix<f64>,
    pub se: Vec<f64>,
    pub hessian_se: Vec<f64>,
}

/// Computes robust (White) standard errors. `contributions` returns the
/// per-observation log-likelihood at a parameter vector; scores and the
/// Hessian of the total are central finite differences with step
/// `1e-4 * max(|theta_i|, 1)`.
pub fn robust_covariance<F>(theta: &[f64], contributions: F) -> Result<RobustCovariance>
where
    F: Fn(&[f64]) -> Result<Vec<f64>>,
{
    let k = theta.len();
    if k == 0 {
        return Ok(RobustCovariance { cov: DMatrix::zeros(0, 0), se: Vec::new(), hessian_se: Vec::new() });
    }
    let base = contributions(theta)?;
    let t = base.len();
    let f0: f64 = base.iter().sum();
    let steps: Vec<f64> = theta.iter().map(|v| SE_STEP * v.abs().max(1.0)).collect();
    let shifted = |moves: &[(usize, f64)]| {
        let mut x = theta.to_vec();
        for &(i, s) in moves {
            x[i] += s * steps[i];
        }
        contributions(&x)
    };

    // per-observation scores
    let mut scores = DMatrix::zeros(t, k);
    let mut plus_total = vec![0.0; k];
    let mut minus_total = vec![0.0; k];
    for i in 0..k {
        let up = shifted(&[(i, 1.0)]);
        let down = shifted(&[(i, -1.0)]);
        match (up, down) {
            (Ok(u), Ok(d)) => {
                for s in 0..t {
                    scores[(s, i)] = (u[s] - d[s]) / (2.0 * steps[i]);
                }
                plus_total[i] = u.iter().sum();
                minus_total[i] = d.iter().sum();
            }
            _ => {
                return Err(Error::Singular(format!(
                    "likelihood undefined next to parameter {i}; check that the estimate is interior and identified"
                )))
            }
        }
    }
    let opg = scores.transpose() * &scores;

    let mut hess = DMatrix::zeros(k, k);
    for i in 0..k {
        hess[(i, i)] = (plus_total[i] - 2.0 * f0 + minus_total[i]) / (steps[i] * steps[i]);
        for j in 0..i {
            let mut corners = [0.0; 4];
            for (c, (si, sj)) in [(1.0, 1.0), (1.0, -1.0), (-1.0, 1.0), (-1.0, -1.0)].iter().enumerate() {
                corners[c] = shifted(&[(i, *si), (j, *sj)])
                    .map_err(|e| Error::Singular(format!("Hessian evaluation failed: {e}")))?
                    .iter()
                    .sum();
            }
            let v = (corners[0] - corners[1] - corners[2] + corners[3]) / (4.0 * steps[i] * steps[j]);
            hess[(i, j)] = v;
            hess[(j, i)] = v;
        }
    }
    let info = -hess;
    let info_inv = invert_information(&info)?;
    let cov = &info_inv * opg * &info_inv;
    let cov = (&cov + cov.transpose()) * 0.5;
    let se = (0..k).map(|i| cov[(i, i)].max(0.0).sqrt()).collect();
    let hessian_se = (0..k).map(|i| info_inv[(i, i)].max(0.0).sqrt()).collect();
    Ok(RobustCovariance { cov, se, hessian_se })
}

fn invert_information(info: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let scale = info.diagonal().amax().max(f64::MIN_POSITIVE);
    let cond_floor = 1e-12 * scale;
    let eig = info.clone().symmetric_eigen();
    let min = eig.eigenvalues.min();
    if !(min > cond_floor) {
        return Err(Error::Singular(format!(
            "Hessian is not negative definite (smallest curvature {min:.3e}); review parameter identification"
        )));
    }
    let inv_diag = DMatrix::from_diagonal(&eig.eigenvalues.map(|v| 1.0 / v));
    Ok(&eig.eigenvectors * inv_diag * eig.eigenvectors.transpose())
}

/// Outcome of a chi-squared test at the 5% level.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TestResult {
    pub name: String,
    pub statistic: f64,
    pub df: usize,
    pub critical_value_5pct: f64,
    pub reject: bool,
    pub p_value: f64,
}

impl TestResult {
    pub fn chi2(name: impl Into<String>, statistic: f64, df: usize) -> Result<Self> {
        let critical_value_5pct = chi2_quantile(0.95, df)?;
        let p_value = if df == 0 { 1.0 } else { chi2_sf(statistic, df) };
        Ok(TestResult { name: name.into(), statistic, df, critical_value_5pct, reject: statistic > critical_value_5pct, p_value })
    }
}

fn chi2_sf(x: f64, df: usize) -> f64 {
    if x <= 0.0 {
        return 1.0;
    }
    if x.is_infinite() {
        return 0.0;
    }
    ChiSquared::new(df as f64).map(|d| d.sf(x)).unwrap_or(f64::NAN)
}

/// Inverse CDF of the chi-squared distribution. `df = 0` is the point mass
/// at zero.
pub fn chi2_quantile(p: f64, df: usize) -> Result<f64> {
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::invalid(format!("probability must lie in (0, 1), got {p}")));
    }
    if df == 0 {
        return Ok(0.0);
    }
    let dist = ChiSquared::new(df as f64).map_err(|e| Error::invalid(e.to_string()))?;
    Ok(dist.inverse_cdf(p))
}

/// Ljung-Box statistics `T(T+2) sum_{k<=L} r_k^2 / (T-k)` for every lag
/// `1..=max_lag`, each compared to a chi-squared with `L` degrees of freedom.
pub fn ljung_box(series: &[f64], max_lag: usize) -> Result<Vec<TestResult>> {
    let t = series.len();
    if max_lag == 0 || t <= max_lag {
        return Err(Error::invalid(format!("Ljung-Box needs 0 < max_lag < T, got lag {max_lag} with T = {t}")));
    }
    let mean = series.iter().sum::<f64>() / t as f64;
    let dev: Vec<f64> = series.iter().map(|v| v - mean).collect();
    let denom: f64 = dev.iter().map(|v| v * v).sum();
    if !(denom > 0.0) || !denom.is_finite() {
        return Err(Error::Degenerate("Ljung-Box series has zero variance".into()));
    }
    let tf = t as f64;
    let mut q = 0.0;
    let mut out = Vec::with_capacity(max_lag);
    for lag in 1..=max_lag {
        let r = dev[lag..].iter().zip(&dev[..t - lag]).map(|(a, b)| a * b).sum::<f64>() / denom;
        q += r * r / (tf - lag as f64);
        out.push(TestResult::chi2(format!("Ljung-Box({lag})"), tf * (tf + 2.0) * q, lag)?);
    }
    Ok(out)
}

/// Cross products `e_i e_j` of two residual columns.
pub fn cross_product(residuals: &DMatrix<f64>, i: usize, j: usize) -> Vec<f64> {
    (0..residuals.nrows()).map(|t| residuals[(t, i)] * residuals[(t, j)]).collect()
}

/// Likelihood ratio `2 (L_u - L_r)` with the difference in parameter counts
/// as degrees of freedom.
pub fn lr_test(restricted: &CorrFitResult, unrestricted: &CorrFitResult) -> Result<TestResult> {
    let (r, u) = (restricted.kind(), unrestricted.kind());
    if r != u && !r.is_nested_in(u) {
        return Err(Error::invalid(format!("{r} is not nested in {u}")));
    }
    let df = unrestricted.spec.parameter_count - restricted.spec.parameter_count;
    lr_test_from_logliks(&format!("LR {r} vs {u}"), restricted.loglik, unrestricted.loglik, df)
}

pub fn lr_test_from_logliks(name: &str, restricted: f64, unrestricted: f64, df: usize) -> Result<TestResult> {
    let stat = 2.0 * (unrestricted - restricted);
    if stat < -1e-6 {
        return Err(Error::Optimizer(format!(
            "{name}: unrestricted log-likelihood is below the restricted one by {:.3e}",
            -stat / 2.0
        )));
    }
    TestResult::chi2(name, stat.max(0.0), df)
}

/// Score test of constant correlations against a smooth transition in the
/// lagged exogenous variable. The null is a CCC fit (one slope matrix) or a
/// CCC-PE fit (one slope matrix per regime). The alternative is linearised
/// as `R_t = R + x_{t-1} Delta`; the statistic is the outer-product form
/// `1' S (S'S)^-1 S' 1` over the per-observation scores `S` of all
/// correlation and slope parameters at the null estimate.
pub fn lm_test_constant_correlation(null_fit: &CorrFitResult, inputs: &CorrInputs) -> Result<TestResult> {
    let n = inputs.n_assets();
    if !inputs.has_exogenous() {
        return Err(Error::invalid("LM test needs the exogenous transition variable"));
    }
    let mats: Vec<DMatrix<f64>> = match &null_fit.params {
        CorrParams::Ccc { r } => vec![r.clone()],
        CorrParams::CccPe { r1, r2 } => vec![r1.clone(), r2.clone()],
        _ => return Err(Error::invalid("LM test null must be CCC or CCC-PE")),
    };
    if mats[0].nrows() != n {
        return Err(Error::invalid("null fit and residuals differ in cross-section size"));
    }
    let inverses = mats
        .iter()
        .map(|m| linalg::spd_inverse(&linalg::to_row_major(m), n).ok_or(Error::NotPositiveDefinite { t: 0 }))
        .collect::<Result<Vec<_>>>()?;
    let pairs = lower_pairs(n);
    let m = pairs.len();
    let blocks = mats.len();
    let k = 2 * m * blocks;
    let t_len = inputs.len();

    // rescaling x does not change the statistic but keeps S'S well scaled
    let xs: Vec<f64> = (0..t_len).map(|t| inputs.x_lag(t)).collect();
    let mean = xs.iter().sum::<f64>() / t_len as f64;
    let sd = (xs.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / t_len as f64).sqrt();
    if !(sd > 0.0) {
        return Err(Error::Degenerate("transition variable is constant".into()));
    }

    let mut ss = DMatrix::<f64>::zeros(k, k);
    let mut s1 = DVector::<f64>::zeros(k);
    let mut row = vec![0.0; k];
    let mut w = vec![0.0; n];
    for t in 0..t_len {
        let b = if blocks == 2 && inputs.regime(t) != 1 { 1 } else { 0 };
        let inv = &inverses[b];
        let e = inputs.row(t);
        for i in 0..n {
            w[i] = (0..n).map(|j| inv[i * n + j] * e[j]).sum();
        }
        let x = (xs[t] - mean) / sd;
        row.iter_mut().for_each(|v| *v = 0.0);
        let off = 2 * m * b;
        for (p, &(i, j)) in pairs.iter().enumerate() {
            let score = w[i] * w[j] - inv[i * n + j];
            row[off + p] = score;
            row[off + m + p] = x * score;
        }
        for a in 0..k {
            if row[a] == 0.0 {
                continue;
            }
            s1[a] += row[a];
            for c in 0..=a {
                ss[(a, c)] += row[a] * row[c];
            }
        }
    }
    for a in 0..k {
        for c in 0..a {
            ss[(c, a)] = ss[(a, c)];
        }
    }
    let chol = ss
        .cholesky()
        .ok_or_else(|| Error::Singular("outer product of scores is singular".into()))?;
    let beta = chol.solve(&s1);
    let stat = s1.dot(&beta).max(0.0);
    let label = if blocks == 1 { "LM constant correlation" } else { "LM constant correlation by regime" };
    TestResult::chi2(label, stat, m * blocks)
}

/// Wald test that the correlations of `pairs` are equal across regime
/// matrices: `R_1` vs `R_2` for CCC-PE and STCC-TUE, and additionally `R_3`
/// vs `R_4` for STCC-TUPE.
pub fn wald_equal_correlations(fit: &CorrFitResult, pairs: &[(usize, usize)]) -> Result<TestResult> {
    let cov = fit
        .robust
        .as_ref()
        .map(|r| &r.cov)
        .ok_or_else(|| Error::invalid("Wald test needs the robust covariance of the fit"))?;
    let comparisons: &[(usize, usize)] = match fit.kind() {
        ModelKind::CccPe | ModelKind::StccTue => &[(0, 1)],
        ModelKind::StccTupe => &[(0, 1), (2, 3)],
        k => return Err(Error::invalid(format!("{k} has no regime correlation matrices"))),
    };
    wald_from_parts(&fit.values, cov, fit.spec.n_assets, comparisons, pairs)
}

/// Wald statistic for equality of entries `pairs` between the matrices
/// listed in `comparisons`, given natural parameters laid out as consecutive
/// lower triangles.
pub fn wald_from_parts(
    values: &[f64],
    cov: &DMatrix<f64>,
    n: usize,
    comparisons: &[(usize, usize)],
    pairs: &[(usize, usize)],
) -> Result<TestResult> {
    let lower = lower_pairs(n);
    let m = lower.len();
    let idx = |(i, j): (usize, usize)| {
        let key = (i.max(j), i.min(j));
        lower.iter().position(|p| *p == key).ok_or_else(|| Error::invalid(format!("pair ({i}, {j}) is not off-diagonal")))
    };
    let mut rows = Vec::new();
    for &(a, b) in comparisons {
        for &p in pairs {
            let k = idx(p)?;
            rows.push((a * m + k, b * m + k));
        }
    }
    if rows.is_empty() {
        return Err(Error::invalid("no pairs to test"));
    }
    let q = rows.len();
    let k = values.len();
    if cov.nrows() != k || rows.iter().any(|&(a, b)| a >= k || b >= k) {
        return Err(Error::invalid("covariance does not match the parameter vector"));
    }
    let mut sel = DMatrix::zeros(q, k);
    let mut diff = DVector::zeros(q);
    for (r, &(a, b)) in rows.iter().enumerate() {
        sel[(r, a)] = 1.0;
        sel[(r, b)] = -1.0;
        diff[r] = values[a] - values[b];
    }
    let v = &sel * cov * sel.transpose();
    let stat = if diff.iter().all(|d| *d == 0.0) {
        0.0
    } else {
        let chol = v.cholesky().ok_or_else(|| Error::Singular("covariance of the differences is singular".into()))?;
        diff.dot(&chol.solve(&diff))
    };
    TestResult::chi2("Wald equal correlations", stat, q)
}

/// AIC and BIC, per observation and raw.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct InformationCriteria {
    pub aic: f64,
    pub bic: f64,
    pub aic_total: f64,
    pub bic_total: f64,
}

pub fn information_criteria(loglik: f64, n_params: usize, n_obs: usize) -> InformationCriteria {
    let k = n_params as f64;
    let t = n_obs as f64;
    let aic_total = -2.0 * loglik + 2.0 * k;
    let bic_total = -2.0 * loglik + k * t.ln();
    InformationCriteria { aic: aic_total / t, bic: bic_total / t, aic_total, bic_total }
}

pub fn fit_information_criteria(fit: &CorrFitResult) -> InformationCriteria {
    information_criteria(fit.loglik, fit.spec.parameter_count, fit.n_obs)
}
