//! First step: univariate GJR-GARCH(1,1) by Gaussian quasi-maximum
//! likelihood, and de-garching of the return panel.

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::ReturnPanel;
use crate::error::{Error, Result};
use crate::inference::{robust_covariance, RobustCovariance};
use crate::optim::{minimize, OptimOptions};

const LN_2PI: f64 = 1.837_877_066_409_345_5;

/// Share of the unit interval available to `alpha + beta + gamma/2`.
const SIMPLEX_SCALE: f64 = 0.9995;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GjrParams {
    pub omega: f64,
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
}

impl GjrParams {
    pub fn new(omega: f64, alpha: f64, beta: f64, gamma: f64) -> Result<Self> {
        let p = GjrParams { omega, alpha, beta, gamma };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.omega > 0.0) || !(self.alpha >= 0.0) || !(self.beta >= 0.0) || !(self.gamma >= 0.0) {
            return Err(Error::params(format!("GJR positivity violated: {self:?}")));
        }
        if !(self.persistence() < 1.0) {
            return Err(Error::params(format!("GJR not stationary: persistence {}", self.persistence())));
        }
        Ok(())
    }

    /// `alpha + beta + gamma / 2`.
    pub fn persistence(&self) -> f64 {
        self.alpha + self.beta + 0.5 * self.gamma
    }

    pub fn unconditional_variance(&self) -> f64 {
        self.omega / (1.0 - self.persistence())
    }

    /// Maps to `(ln omega, u_alpha, u_beta, u_gamma)`, the inverse of
    /// [`GjrParams::from_unconstrained`].
    pub fn to_unconstrained(&self) -> [f64; 4] {
        let p = [self.alpha / SIMPLEX_SCALE, self.beta / SIMPLEX_SCALE, 0.5 * self.gamma / SIMPLEX_SCALE];
        let slack = 1.0 - p.iter().sum::<f64>();
        let u = |v: f64| (v.max(1e-300) / slack).ln();
        [self.omega.ln(), u(p[0]), u(p[1]), u(p[2])]
    }

    pub fn from_unconstrained(u: &[f64]) -> Self {
        let m = u[1..4].iter().fold(0.0f64, |a, b| a.max(*b));
        let e: Vec<f64> = u[1..4].iter().map(|v| (v - m).exp()).collect();
        let den = (-m).exp() + e.iter().sum::<f64>();
        GjrParams {
            omega: u[0].exp(),
            alpha: SIMPLEX_SCALE * e[0] / den,
            beta: SIMPLEX_SCALE * e[1] / den,
            gamma: 2.0 * SIMPLEX_SCALE * e[2] / den,
        }
    }

    pub fn to_vec(&self) -> Vec<f64> {
        vec![self.omega, self.alpha, self.beta, self.gamma]
    }
}

/// Conditional variances `h^2_t`: `h^2_1 = h0`, then
/// `h^2_t = omega + (alpha + gamma 1[r_{t-1} < 0]) r^2_{t-1} + beta h^2_{t-1}`.
pub fn gjr_variance_path(params: &GjrParams, returns: &[f64], h0: f64) -> Result<Vec<f64>> {
    params.validate()?;
    if !(h0 > 0.0) || !h0.is_finite() {
        return Err(Error::params(format!("initial variance must be positive, got {h0}")));
    }
    variance_recursion(params, returns, h0)
}

fn variance_recursion(p: &GjrParams, returns: &[f64], h0: f64) -> Result<Vec<f64>> {
    let mut h = Vec::with_capacity(returns.len());
    if returns.is_empty() {
        return Ok(h);
    }
    h.push(h0);
    for t in 1..returns.len() {
        let r = returns[t - 1];
        let lev = if r < 0.0 { p.gamma } else { 0.0 };
        let v = p.omega + (p.alpha + lev) * r * r + p.beta * h[t - 1];
        if !v.is_finite() {
            return Err(Error::NonFinite { context: "GJR variance", t });
        }
        h.push(v);
    }
    Ok(h)
}

/// Per-observation Gaussian log-likelihood terms under `params`.
pub fn gjr_loglik_contributions(params: &GjrParams, returns: &[f64], h0: f64) -> Result<Vec<f64>> {
    let h = variance_recursion(params, returns, h0)?;
    Ok(returns.iter().zip(&h).map(|(r, v)| -0.5 * (LN_2PI + v.ln() + r * r / v)).collect())
}

fn loglik(params: &GjrParams, returns: &[f64], h0: f64) -> f64 {
    let mut h = h0;
    let mut ll = 0.0;
    for (t, r) in returns.iter().enumerate() {
        if t > 0 {
            let prev = returns[t - 1];
            let lev = if prev < 0.0 { params.gamma } else { 0.0 };
            h = params.omega + (params.alpha + lev) * prev * prev + params.beta * h;
        }
        ll += -0.5 * (LN_2PI + h.ln() + r * r / h);
    }
    ll
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GarchFit {
    pub params: GjrParams,
    /// Robust standard errors of `(omega, alpha, beta, gamma)`, when the
    /// Hessian could be inverted.
    pub robust_se: Option<[f64; 4]>,
    pub h0: f64,
    pub loglik: f64,
    pub converged: bool,
    #[serde(skip)]
    pub variance_path: Vec<f64>,
    #[serde(skip)]
    pub residuals: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct GarchOptions {
    pub min_obs: usize,
    pub optim: OptimOptions,
    pub robust_se: bool,
}

impl Default for GarchOptions {
    fn default() -> Self {
        GarchOptions { min_obs: 100, optim: OptimOptions::default(), robust_se: true }
    }
}

pub fn fit_gjr(returns: &[f64]) -> Result<GarchFit> {
    fit_gjr_with(returns, &GarchOptions::default())
}

/// Quasi-maximum likelihood fit of a zero-mean GJR-GARCH(1,1). The initial
/// variance is the sample second moment of `returns`.
pub fn fit_gjr_with(returns: &[f64], opts: &GarchOptions) -> Result<GarchFit> {
    let t = returns.len();
    if t < opts.min_obs {
        return Err(Error::invalid(format!("GJR fit needs at least {} observations, got {t}", opts.min_obs)));
    }
    if let Some(k) = returns.iter().position(|r| !r.is_finite()) {
        return Err(Error::NonFinite { context: "returns", t: k });
    }
    let h0 = returns.iter().map(|r| r * r).sum::<f64>() / t as f64;
    if !(h0 > 0.0) {
        return Err(Error::Degenerate("returns have zero variance".into()));
    }

    let objective = |u: &[f64]| -loglik(&GjrParams::from_unconstrained(u), returns, h0) / t as f64;
    let starts = [(0.05, 0.90, 0.05), (0.02, 0.96, 0.02), (0.10, 0.60, 0.05), (0.03, 0.20, 0.02)];
    let mut best: Option<crate::optim::OptimResult> = None;
    for (k, (a, b, g)) in starts.iter().enumerate() {
        let start = GjrParams { omega: h0 * (1.0 - a - b - g / 2.0), alpha: *a, beta: *b, gamma: *g };
        let mut o = opts.optim.clone();
        o.seed = opts.optim.seed.wrapping_add(k as u64);
        let r = minimize(objective, &start.to_unconstrained(), &o);
        let better = match &best {
            None => true,
            Some(b) => r.fx < b.fx - 1e-12 || (r.fx <= b.fx + 1e-12 && r.converged && !b.converged),
        };
        if better {
            best = Some(r);
        }
    }
    let best = best.expect("at least one start");
    let params = GjrParams::from_unconstrained(&best.x);
    let variance_path = variance_recursion(&params, returns, h0)?;
    let residuals = returns.iter().zip(&variance_path).map(|(r, h)| r / h.sqrt()).collect();
    let robust_se = if opts.robust_se { garch_robust_covariance(&params, returns, h0).ok().map(|c| {
        [c.se[0], c.se[1], c.se[2], c.se[3]]
    }) } else { None };
    Ok(GarchFit {
        params,
        robust_se,
        h0,
        loglik: -best.fx * t as f64,
        converged: best.converged,
        variance_path,
        residuals,
    })
}

/// Sandwich covariance of `(omega, alpha, beta, gamma)` at `params`.
pub fn garch_robust_covariance(params: &GjrParams, returns: &[f64], h0: f64) -> Result<RobustCovariance> {
    let contributions = |theta: &[f64]| {
        let p = GjrParams { omega: theta[0], alpha: theta[1], beta: theta[2], gamma: theta[3] };
        if !(p.omega > 0.0) {
            return Err(Error::params("omega must stay positive"));
        }
        gjr_loglik_contributions(&p, returns, h0)
    };
    robust_covariance(&params.to_vec(), contributions)
}

/// Fits every column of `panel` independently (in parallel).
pub fn fit_panel(panel: &ReturnPanel, opts: &GarchOptions) -> Result<Vec<GarchFit>> {
    (0..panel.n_assets()).into_par_iter().map(|i| fit_gjr_with(&panel.column(i), opts)).collect()
}

/// De-garched returns `r_{i,t} / h_{i,t}` as a `T x N` matrix.
pub fn degarch(panel: &ReturnPanel, fits: &[GarchFit]) -> Result<DMatrix<f64>> {
    if fits.len() != panel.n_assets() {
        return Err(Error::invalid(format!("{} fits for {} assets", fits.len(), panel.n_assets())));
    }
    for (i, f) in fits.iter().enumerate() {
        if f.variance_path.len() != panel.len() {
            return Err(Error::invalid(format!(
                "variance path of asset {i} has length {}, panel has {}",
                f.variance_path.len(),
                panel.len()
            )));
        }
    }
    let r = panel.returns();
    Ok(DMatrix::from_fn(panel.len(), panel.n_assets(), |t, i| r[(t, i)] / fits[i].variance_path[t].sqrt()))
}
