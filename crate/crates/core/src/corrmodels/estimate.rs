use std::collections::BTreeMap;

use nalgebra::DMatrix;
use serde::Serialize;

use super::params::{correlation_to_angles, embed_unconstrained, CorrParams, SLOPE_MAX};
use super::path::{
    build_path, correlation_targeting, loglik_contributions, loglik_total, CorrInputs, CorrelationPath,
    TargetingOptions,
};
use super::spec::{ModelKind, ModelSpec};
use crate::error::{Error, Result};
use crate::inference::{robust_covariance, RobustCovariance};
use crate::linalg;
use crate::optim::{minimize, OptimOptions, OptimResult};

#[derive(Debug, Clone)]
pub struct EstimateOptions {
    pub optim: OptimOptions,
    /// Targeting used for the reported target matrix.
    pub targeting: TargetingOptions,
    /// Targeting used inside the likelihood objective; tighter so that the
    /// finite-difference gradients see a smooth function.
    pub objective_targeting: TargetingOptions,
    pub robust_se: bool,
}

impl Default for EstimateOptions {
    fn default() -> Self {
        EstimateOptions {
            optim: OptimOptions { polish_evals: 300, ..OptimOptions::default() },
            targeting: TargetingOptions::default(),
            objective_targeting: TargetingOptions { tol: 1e-11, max_iter: 200 },
            robust_se: true,
        }
    }
}

/// A fitted correlation model.
#[derive(Debug, Clone)]
pub struct CorrFitResult {
    pub spec: ModelSpec,
    pub params: CorrParams,
    pub names: Vec<String>,
    /// Natural parameter values, aligned with `names`.
    pub values: Vec<f64>,
    /// Optimizer coordinates of the optimum (used for warm starts).
    pub unconstrained: Vec<f64>,
    pub loglik: f64,
    pub n_obs: usize,
    pub correlation_path: CorrelationPath,
    /// Sandwich covariance of `values`; `None` if the Hessian was singular.
    pub robust: Option<RobustCovariance>,
    /// DCC target matrix.
    pub targeting: Option<DMatrix<f64>>,
    pub targeting_converged: bool,
    pub xbar: f64,
    pub converged: bool,
}

impl CorrFitResult {
    pub fn kind(&self) -> ModelKind {
        self.spec.family
    }

    pub fn robust_se(&self) -> Option<&[f64]> {
        self.robust.as_ref().map(|r| r.se.as_slice())
    }

    pub fn value(&self, name: &str) -> Option<f64> {
        self.names.iter().position(|n| n == name).map(|i| self.values[i])
    }

    pub fn se(&self, name: &str) -> Option<f64> {
        let i = self.names.iter().position(|n| n == name)?;
        self.robust_se().map(|s| s[i])
    }

    pub fn document(&self, asset_names: &[String]) -> FitDocument {
        FitDocument {
            model: self.kind().label().to_string(),
            assets: asset_names.to_vec(),
            n_obs: self.n_obs,
            loglik: self.loglik,
            converged: self.converged,
            parameter_count: self.spec.parameter_count,
            parameters: self
                .names
                .iter()
                .enumerate()
                .map(|(i, name)| NamedParam {
                    name: name.clone(),
                    value: self.values[i],
                    robust_se: self.robust_se().map(|s| s[i]),
                })
                .collect(),
            targeting: self.targeting.as_ref().map(|m| (0..m.nrows()).map(|i| m.row(i).iter().copied().collect()).collect()),
            targeting_converged: self.targeting.as_ref().map(|_| self.targeting_converged),
            exogenous_mean: if self.kind().uses_exogenous() { Some(self.xbar) } else { None },
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct NamedParam {
    pub name: String,
    pub value: f64,
    pub robust_se: Option<f64>,
}

/// Serializable summary of a fit.
#[derive(Debug, Clone, Serialize)]
pub struct FitDocument {
    pub model: String,
    pub assets: Vec<String>,
    pub n_obs: usize,
    pub loglik: f64,
    pub converged: bool,
    pub parameter_count: usize,
    pub parameters: Vec<NamedParam>,
    pub targeting: Option<Vec<Vec<f64>>>,
    pub targeting_converged: Option<bool>,
    pub exogenous_mean: Option<f64>,
}

fn rows_where(inputs: &CorrInputs, pred: impl Fn(usize) -> bool) -> DMatrix<f64> {
    let n = inputs.n_assets();
    let idx: Vec<usize> = (0..inputs.len()).filter(|&t| pred(t)).collect();
    DMatrix::from_fn(idx.len(), n, |r, c| inputs.row(idx[r])[c])
}

/// Sample correlation on a subset, falling back to the full sample when the
/// subset is too small to be positive definite.
fn subset_correlation(inputs: &CorrInputs, pred: impl Fn(usize) -> bool) -> DMatrix<f64> {
    let rows = rows_where(inputs, pred);
    let n = inputs.n_assets();
    if rows.nrows() >= 4 * n + 10 {
        let r = linalg::moment_correlation(&rows);
        if r.iter().all(|v| v.is_finite()) && linalg::min_eigenvalue(&r) > 1e-8 {
            return r;
        }
    }
    linalg::moment_correlation(&inputs.residual_matrix())
}

fn quantile(sorted: &[f64], p: f64) -> f64 {
    if sorted.is_empty() {
        return 0.0;
    }
    let pos = p * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (pos - lo as f64) * (sorted[hi] - sorted[lo])
}

/// `(location, slope)` start for a transition over the lagged exogenous
/// values of the rows selected by `pred`.
fn transition_start(inputs: &CorrInputs, pred: impl Fn(usize) -> bool) -> (f64, f64) {
    let mut xs: Vec<f64> = (0..inputs.len()).filter(|&t| pred(t)).map(|t| inputs.x_lag(t)).collect();
    if xs.is_empty() {
        xs = (0..inputs.len()).map(|t| inputs.x_lag(t)).collect();
    }
    xs.sort_by(f64::total_cmp);
    let c = quantile(&xs, 0.5);
    let iqr = quantile(&xs, 0.75) - quantile(&xs, 0.25);
    let slope = if iqr > 0.0 { (4.0 / iqr).clamp(0.5, 0.5 * SLOPE_MAX) } else { 1.0 };
    (c, slope)
}

fn slope_u(slope: f64) -> f64 {
    let p = slope / SLOPE_MAX;
    (p / (1.0 - p)).ln()
}

fn generic_starts(kind: ModelKind, inputs: &CorrInputs) -> Result<Vec<Vec<f64>>> {
    let full = || linalg::moment_correlation(&inputs.residual_matrix());
    let ang = |m: &DMatrix<f64>| correlation_to_angles(m);
    let starts = match kind {
        ModelKind::Ccc => vec![ang(&full())?],
        ModelKind::CccPe => {
            let r1 = subset_correlation(inputs, |t| inputs.regime(t) == 1);
            let r2 = subset_correlation(inputs, |t| inputs.regime(t) != 1);
            vec![[ang(&r1)?, ang(&r2)?].concat()]
        }
        ModelKind::StccTue => {
            let (c, slope) = transition_start(inputs, |_| true);
            let hi = subset_correlation(inputs, |t| inputs.x_lag(t) > c);
            let lo = subset_correlation(inputs, |t| inputs.x_lag(t) <= c);
            vec![
                [ang(&hi)?, ang(&lo)?, vec![slope_u(slope), c]].concat(),
                [ang(&lo)?, ang(&hi)?, vec![slope_u(slope), c]].concat(),
            ]
        }
        ModelKind::StccTupe => {
            let mut blocks = Vec::new();
            let mut trans = Vec::new();
            for regime in [1u8, 0u8] {
                let in_regime = |t: usize| (inputs.regime(t) == 1) == (regime == 1);
                let (c, slope) = transition_start(inputs, in_regime);
                blocks.push(ang(&subset_correlation(inputs, |t| in_regime(t) && inputs.x_lag(t) > c))?);
                blocks.push(ang(&subset_correlation(inputs, |t| in_regime(t) && inputs.x_lag(t) <= c))?);
                trans.extend([slope_u(slope), c]);
            }
            vec![[blocks.concat(), trans].concat()]
        }
        _ => {
            // grid over persistence and shock loading; psi takes half the room
            let grid = [(0.05, 0.90), (0.02, 0.96), (0.10, 0.85), (0.20, 0.75)];
            let xbar = inputs.xbar();
            grid.iter()
                .map(|&(a, b)| {
                    let room = 1.0 - a - b;
                    let psi = if xbar > 0.0 { 0.5 * room / xbar } else { 0.0 };
                    let p = match kind {
                        ModelKind::Dcc => super::DccParams::dcc(a, b),
                        ModelKind::DccTue => super::DccParams::tue(a, b, psi),
                        ModelKind::DccTupePsi => super::DccParams::tupe_psi(a, b, psi, psi),
                        ModelKind::DccPe => super::DccParams::pe(a, b, a, b),
                        _ => super::DccParams::tupe((a, b, psi), (a, b, psi)),
                    };
                    CorrParams::Dcc(p).to_unconstrained(xbar)
                })
                .collect::<Result<Vec<_>>>()?
        }
    };
    Ok(starts)
}

struct Objective<'a> {
    kind: ModelKind,
    inputs: &'a CorrInputs,
    targeting: TargetingOptions,
}

impl Objective<'_> {
    fn params(&self, u: &[f64]) -> CorrParams {
        CorrParams::from_unconstrained(self.kind, self.inputs.n_assets(), u, self.inputs.xbar())
    }

    fn value(&self, u: &[f64]) -> f64 {
        let p = self.params(u);
        let ll = match &p {
            CorrParams::Dcc(d) => correlation_targeting(d, self.inputs, self.targeting)
                .and_then(|tg| loglik_total(&p, self.inputs, Some(&tg.rbar))),
            _ => loglik_total(&p, self.inputs, None),
        };
        match ll {
            Ok(v) => -v / self.inputs.len() as f64,
            Err(_) => f64::INFINITY,
        }
    }
}

pub fn estimate(kind: ModelKind, inputs: &CorrInputs, opts: &EstimateOptions) -> Result<CorrFitResult> {
    estimate_with_warm_starts(kind, inputs, &[], opts)
}

/// Maximizes the correlation likelihood of `kind`. Fits of nested models in
/// `warm` are embedded as additional starting points, which guarantees the
/// result is at least as good as each of them.
pub fn estimate_with_warm_starts(
    kind: ModelKind,
    inputs: &CorrInputs,
    warm: &[&CorrFitResult],
    opts: &EstimateOptions,
) -> Result<CorrFitResult> {
    inputs.check_for(kind)?;
    let n = inputs.n_assets();
    if n < 2 {
        return Err(Error::invalid("correlation models need at least 2 assets"));
    }
    if inputs.len() <= kind.parameter_count(n) {
        return Err(Error::invalid(format!("{kind}: {} observations for {} parameters", inputs.len(), kind.parameter_count(n))));
    }
    let obj = Objective { kind, inputs, targeting: opts.objective_targeting };
    let f = |u: &[f64]| obj.value(u);

    let starts = generic_starts(kind, inputs)?;
    let mut scored: Vec<(f64, Vec<f64>)> = starts.into_iter().map(|s| (f(&s), s)).collect();
    scored.sort_by(|a, b| a.0.total_cmp(&b.0));
    if !scored[0].0.is_finite() {
        return Err(Error::Optimizer(format!("{kind}: no feasible starting point")));
    }
    let mut best: OptimResult = minimize(f, &scored[0].1, &opts.optim);

    let (c0, slope0) = transition_start(inputs, |_| true);
    for w in warm {
        if w.spec.n_assets != n || !w.kind().is_nested_in(kind) {
            continue;
        }
        let Some(u) = embed_unconstrained(w.kind(), kind, n, &w.unconstrained, [slope_u(slope0), c0]) else {
            continue;
        };
        let fw = f(&u);
        if fw < best.fx {
            let run = minimize(f, &u, &opts.optim);
            if run.fx < best.fx {
                best = run;
            }
        }
    }
    if !best.converged {
        log::warn!("{kind}: optimizer did not meet the convergence test");
    }
    finish(kind, inputs, best, opts)
}

fn finish(kind: ModelKind, inputs: &CorrInputs, best: OptimResult, opts: &EstimateOptions) -> Result<CorrFitResult> {
    let n = inputs.n_assets();
    let params = CorrParams::from_unconstrained(kind, n, &best.x, inputs.xbar());
    let (targeting, targeting_converged) = match &params {
        CorrParams::Dcc(d) => {
            let tg = correlation_targeting(d, inputs, opts.objective_targeting)?;
            (Some(tg.rbar), tg.last_change < opts.targeting.tol)
        }
        _ => (None, true),
    };
    let path = build_path(&params, inputs, targeting.as_ref())?;
    let loglik = loglik_total(&params, inputs, targeting.as_ref())?;
    let values = params.to_natural();
    let robust = if opts.robust_se {
        let rbar = targeting.clone();
        let contributions = |theta: &[f64]| {
            let p = CorrParams::from_natural(kind, n, theta)?;
            loglik_contributions(&p, inputs, rbar.as_ref())
        };
        match robust_covariance(&values, contributions) {
            Ok(r) => Some(r),
            Err(e) => {
                log::warn!("{kind}: robust standard errors unavailable: {e}");
                None
            }
        }
    } else {
        None
    };
    Ok(CorrFitResult {
        spec: ModelSpec::new(kind, n),
        names: CorrParams::names(kind, n),
        values,
        params,
        unconstrained: best.x,
        loglik,
        n_obs: inputs.len(),
        correlation_path: path,
        robust,
        targeting,
        targeting_converged,
        xbar: inputs.xbar(),
        converged: best.converged && targeting_converged,
    })
}

/// Fits several models, smaller nested models first so that each larger
/// model is warm-started from its sub-models. Results follow `kinds` order.
pub fn estimate_all(kinds: &[ModelKind], inputs: &CorrInputs, opts: &EstimateOptions) -> Result<Vec<CorrFitResult>> {
    let mut order: Vec<ModelKind> = kinds.to_vec();
    order.sort_by_key(|k| k.parameter_count(inputs.n_assets()));
    order.dedup();
    let mut done: BTreeMap<ModelKind, CorrFitResult> = BTreeMap::new();
    for k in order {
        let warm: Vec<&CorrFitResult> = done.values().filter(|f| f.kind().is_nested_in(k)).collect();
        let fit = estimate_with_warm_starts(k, inputs, &warm, opts)?;
        done.insert(k, fit);
    }
    Ok(kinds.iter().map(|k| done[k].clone()).collect())
}
