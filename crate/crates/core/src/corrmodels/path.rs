use chrono::NaiveDate;
use nalgebra::DMatrix;
use std::io::Write;

use super::params::{logistic_transition, CorrParams, DccParams};
use super::spec::ModelKind;
use crate::data::{ExogenousSeries, RegimeCalendar};
use crate::error::{Error, Result};
use crate::linalg;

const LN_2PI: f64 = 1.837_877_066_409_345_5;

/// Standardized residuals with the optional exogenous driver and regime
/// dummy, laid out for the per-observation recursions.
#[derive(Debug, Clone)]
pub struct CorrInputs {
    t: usize,
    n: usize,
    eps: Vec<f64>,
    x: Option<Vec<f64>>,
    xbar: f64,
    dummy: Option<Vec<u8>>,
}

impl CorrInputs {
    /// `exog` and `regimes`, when given, must have one entry per residual
    /// row. The exogenous mean defaults to the series' own sample mean.
    pub fn new(residuals: &DMatrix<f64>, exog: Option<&ExogenousSeries>, regimes: Option<&RegimeCalendar>) -> Result<Self> {
        let (t, n) = residuals.shape();
        if t == 0 || n == 0 {
            return Err(Error::invalid("empty residual matrix"));
        }
        if let Some(k) = residuals.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite { context: "residuals", t: k % t });
        }
        if let Some(x) = exog {
            if x.len() != t {
                return Err(Error::invalid(format!("exogenous series has {} values for {t} residual rows", x.len())));
            }
        }
        if let Some(d) = regimes {
            if d.len() != t {
                return Err(Error::invalid(format!("regime calendar has {} values for {t} residual rows", d.len())));
            }
        }
        Ok(CorrInputs {
            t,
            n,
            eps: linalg::to_row_major(residuals),
            x: exog.map(|x| x.values.clone()),
            xbar: exog.map(|x| x.sample_mean).unwrap_or(0.0),
            dummy: regimes.map(|d| d.dummy.clone()),
        })
    }

    /// Overrides the exogenous mean (used when forecasting beyond the
    /// estimation window).
    pub fn with_xbar(mut self, xbar: f64) -> Self {
        self.xbar = xbar;
        self
    }

    pub fn len(&self) -> usize {
        self.t
    }

    pub fn is_empty(&self) -> bool {
        self.t == 0
    }

    pub fn n_assets(&self) -> usize {
        self.n
    }

    pub fn xbar(&self) -> f64 {
        self.xbar
    }

    pub fn has_exogenous(&self) -> bool {
        self.x.is_some()
    }

    pub fn has_regimes(&self) -> bool {
        self.dummy.is_some()
    }

    pub fn row(&self, t: usize) -> &[f64] {
        &self.eps[t * self.n..(t + 1) * self.n]
    }

    /// `x_{t-1}`; the first observation uses `x_0`.
    pub fn x_lag(&self, t: usize) -> f64 {
        self.x.as_ref().map(|x| x[t.saturating_sub(1)]).unwrap_or(0.0)
    }

    pub fn exog_values(&self) -> Option<&[f64]> {
        self.x.as_deref()
    }

    /// `D_t`; defaults to 1 when no calendar is attached.
    pub fn regime(&self, t: usize) -> u8 {
        self.dummy.as_ref().map(|d| d[t]).unwrap_or(1)
    }

    pub fn residual_matrix(&self) -> DMatrix<f64> {
        DMatrix::from_row_slice(self.t, self.n, &self.eps)
    }

    pub(crate) fn check_for(&self, kind: ModelKind) -> Result<()> {
        if kind.uses_exogenous() && self.x.is_none() {
            return Err(Error::invalid(format!("{kind} requires the exogenous series")));
        }
        if kind.uses_exogenous() && kind.is_dcc() && !(self.xbar > 0.0) {
            return Err(Error::invalid(format!("{kind} requires an exogenous series with positive mean")));
        }
        if kind.uses_regime() && self.dummy.is_none() {
            return Err(Error::invalid(format!("{kind} requires the regime calendar")));
        }
        Ok(())
    }
}

/// Sequence of conditional correlation matrices.
#[derive(Debug, Clone)]
pub struct CorrelationPath {
    pub model: ModelKind,
    pub matrices: Vec<DMatrix<f64>>,
}

impl CorrelationPath {
    pub fn len(&self) -> usize {
        self.matrices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.matrices.is_empty()
    }

    pub fn pair(&self, i: usize, j: usize) -> Vec<f64> {
        self.matrices.iter().map(|m| m[(i, j)]).collect()
    }

    /// Long format: `date,asset_i,asset_j,rho` for every `i < j`.
    pub fn write_long<W: Write>(&self, dates: &[NaiveDate], names: &[String], writer: W, delimiter: u8) -> Result<()> {
        if dates.len() != self.len() {
            return Err(Error::invalid("path and dates differ in length"));
        }
        let mut w = csv::WriterBuilder::new().delimiter(delimiter).from_writer(writer);
        w.write_record(["date", "asset_i", "asset_j", "rho"])?;
        for (d, m) in dates.iter().zip(&self.matrices) {
            for i in 0..names.len() {
                for j in (i + 1)..names.len() {
                    w.write_record([d.format("%Y-%m-%d").to_string(), names[i].clone(), names[j].clone(), m[(i, j)].to_string()])?;
                }
            }
        }
        w.flush()?;
        Ok(())
    }
}

/// Produces `R_t` one observation at a time for any specification.
pub(crate) struct Stepper<'a> {
    params: &'a CorrParams,
    n: usize,
    xbar: f64,
    mats: Vec<Vec<f64>>,
    rbar: Vec<f64>,
    q: Vec<f64>,
    q_prev: Vec<f64>,
    z: Vec<f64>,
    r: Vec<f64>,
    t: usize,
}

impl<'a> Stepper<'a> {
    pub(crate) fn new(params: &'a CorrParams, n: usize, rbar: Option<&DMatrix<f64>>, xbar: f64) -> Result<Self> {
        let mats: Vec<Vec<f64>> = params.matrices().into_iter().map(linalg::to_row_major).collect();
        for m in &mats {
            if m.len() != n * n {
                return Err(Error::invalid("correlation matrix size does not match the residuals"));
            }
        }
        let rbar = match (params, rbar) {
            (CorrParams::Dcc(p), Some(r)) => {
                if r.nrows() != n {
                    return Err(Error::invalid("target matrix size does not match the residuals"));
                }
                for d in 0..2 {
                    if !(p.intercept(d, xbar) > 0.0) {
                        return Err(Error::params(format!(
                            "intercept 1 - a - b - psi*xbar = {} is not positive in regime {}",
                            p.intercept(d, xbar),
                            d + 1
                        )));
                    }
                }
                linalg::to_row_major(r)
            }
            (CorrParams::Dcc(_), None) => return Err(Error::invalid("DCC recursion needs a target matrix")),
            _ => Vec::new(),
        };
        Ok(Stepper {
            params,
            n,
            xbar,
            mats,
            q: rbar.clone(),
            q_prev: vec![0.0; if rbar.is_empty() { 0 } else { n * n }],
            rbar,
            z: vec![0.0; n],
            r: vec![0.0; n * n],
            t: 0,
        })
    }

    /// Computes `R_t` for the next observation. `x_prev` is `x_{t-1}`,
    /// `regime` is `D_t` and `eps_prev` the previous residual row (unused at
    /// the first step).
    pub(crate) fn step(&mut self, x_prev: f64, regime: u8, eps_prev: &[f64]) {
        let n = self.n;
        match self.params {
            CorrParams::Ccc { .. } => self.r.copy_from_slice(&self.mats[0]),
            CorrParams::CccPe { .. } => {
                let k = if regime == 1 { 0 } else { 1 };
                self.r.copy_from_slice(&self.mats[k]);
            }
            CorrParams::StccTue { transition, .. } => {
                let g = logistic_transition(x_prev, transition);
                blend(&mut self.r, &self.mats[0], &self.mats[1], g, n);
            }
            CorrParams::StccTupe { transition1, transition2, .. } => {
                let (k, tr) = if regime == 1 { (0, transition1) } else { (2, transition2) };
                let g = logistic_transition(x_prev, tr);
                blend(&mut self.r, &self.mats[k], &self.mats[k + 1], g, n);
            }
            CorrParams::Dcc(p) => {
                if self.t > 0 {
                    self.dcc_update(p, x_prev, regime, eps_prev);
                }
                for i in 0..n {
                    self.z[i] = self.q[i * n + i].sqrt();
                }
                for i in 0..n {
                    for j in 0..n {
                        self.r[i * n + j] =
                            if i == j { 1.0 } else { self.q[i * n + j] / (self.z[i] * self.z[j]) };
                    }
                }
            }
        }
        self.t += 1;
    }

    /// Current `R_t`, row-major.
    pub(crate) fn r(&self) -> &[f64] {
        &self.r
    }

    fn dcc_update(&mut self, p: &DccParams, x_prev: f64, regime: u8, eps_prev: &[f64]) {
        let n = self.n;
        let d = if regime == 1 { 0 } else { 1 };
        let (a, b, psi) = (p.a[d], p.b[d], p.psi[d]);
        let c = 1.0 - a - b - psi * self.xbar + psi * x_prev;
        std::mem::swap(&mut self.q, &mut self.q_prev);
        for i in 0..n {
            self.z[i] = self.q_prev[i * n + i].sqrt() * eps_prev[i];
        }
        for i in 0..n {
            for j in 0..n {
                let k = i * n + j;
                self.q[k] = c * self.rbar[k] + a * self.z[i] * self.z[j] + b * self.q_prev[k];
            }
        }
    }

    /// Current `Q_t` (DCC only).
    pub(crate) fn q(&self) -> &[f64] {
        &self.q
    }
}

fn blend(out: &mut [f64], r1: &[f64], r2: &[f64], g: f64, n: usize) {
    let h = 1.0 - g;
    for k in 0..out.len() {
        out[k] = g * r1[k] + h * r2[k];
    }
    for i in 0..n {
        out[i * n + i] = 1.0;
    }
}

fn for_each_correlation<F>(params: &CorrParams, inputs: &CorrInputs, rbar: Option<&DMatrix<f64>>, mut f: F) -> Result<()>
where
    F: FnMut(usize, &[f64], Option<&[f64]>) -> Result<()>,
{
    let mut st = Stepper::new(params, inputs.n_assets(), rbar, inputs.xbar())?;
    let is_dcc = matches!(params, CorrParams::Dcc(_));
    for t in 0..inputs.len() {
        let prev = if t > 0 { inputs.row(t - 1) } else { inputs.row(0) };
        st.step(inputs.x_lag(t), inputs.regime(t), prev);
        f(t, st.r(), if is_dcc { Some(st.q()) } else { None })?;
    }
    Ok(())
}

/// Correlation path implied by `params` on `inputs`. DCC models need the
/// target `rbar`.
pub fn build_path(params: &CorrParams, inputs: &CorrInputs, rbar: Option<&DMatrix<f64>>) -> Result<CorrelationPath> {
    inputs.check_for(params.kind())?;
    let n = inputs.n_assets();
    let mut matrices = Vec::with_capacity(inputs.len());
    for_each_correlation(params, inputs, rbar, |_, r, _| {
        matrices.push(linalg::from_row_major(r, n));
        Ok(())
    })?;
    Ok(CorrelationPath { model: params.kind(), matrices })
}

/// cDCC recursion with correlation targeting:
/// `Q_1 = Rbar`, and for `t >= 2` with `d` the regime at `t`,
/// `Q_t = (1 - a_d - b_d - psi_d xbar) Rbar + a_d Q~_{t-1} e_{t-1} e_{t-1}' Q~_{t-1}
///        + b_d Q_{t-1} + psi_d x_{t-1} Rbar`, `R_t = Q~_t^-1 Q_t Q~_t^-1`.
pub fn dcc_recursion(
    params: &DccParams,
    inputs: &CorrInputs,
    rbar: &DMatrix<f64>,
) -> Result<(Vec<DMatrix<f64>>, CorrelationPath)> {
    let n = inputs.n_assets();
    let cp = CorrParams::Dcc(*params);
    let mut qs = Vec::with_capacity(inputs.len());
    let mut rs = Vec::with_capacity(inputs.len());
    for_each_correlation(&cp, inputs, Some(rbar), |_, r, q| {
        qs.push(linalg::from_row_major(q.expect("dcc"), n));
        rs.push(linalg::from_row_major(r, n));
        Ok(())
    })?;
    Ok((qs, CorrelationPath { model: params.restriction, matrices: rs }))
}

#[derive(Debug, Clone, Copy)]
pub struct TargetingOptions {
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for TargetingOptions {
    fn default() -> Self {
        TargetingOptions { tol: 1e-6, max_iter: 50 }
    }
}

#[derive(Debug, Clone)]
pub struct Targeting {
    pub rbar: DMatrix<f64>,
    pub iterations: usize,
    pub converged: bool,
    /// Largest absolute change in the last iteration.
    pub last_change: f64,
}

/// Fixed point for the DCC target: start from the sample correlation of the
/// residuals, run the recursion, and replace the target by the sample
/// correlation of `Q~_t e_t` until the largest change is below `tol`.
pub fn correlation_targeting(params: &DccParams, inputs: &CorrInputs, opts: TargetingOptions) -> Result<Targeting> {
    let n = inputs.n_assets();
    let mut rbar = linalg::moment_correlation(&inputs.residual_matrix());
    let cp = CorrParams::Dcc(*params);
    let mut last_change = f64::INFINITY;
    for it in 1..=opts.max_iter {
        let mut s = vec![0.0; n * n];
        let mut z = vec![0.0; n];
        for_each_correlation(&cp, inputs, Some(&rbar), |t, _, q| {
            let q = q.expect("dcc");
            let e = inputs.row(t);
            for i in 0..n {
                z[i] = q[i * n + i].sqrt() * e[i];
            }
            for i in 0..n {
                for j in i..n {
                    s[i * n + j] += z[i] * z[j];
                }
            }
            Ok(())
        })?;
        for i in 0..n {
            for j in 0..i {
                s[i * n + j] = s[j * n + i];
            }
        }
        let next = linalg::normalize_to_correlation(&linalg::from_row_major(&s, n));
        if next.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite { context: "correlation targeting", t: it });
        }
        last_change = (&next - &rbar).amax();
        rbar = next;
        if last_change < opts.tol {
            return Ok(Targeting { rbar, iterations: it, converged: true, last_change });
        }
    }
    log::warn!("correlation targeting stopped after {} iterations (change {last_change:.2e})", opts.max_iter);
    Ok(Targeting { rbar, iterations: opts.max_iter, converged: false, last_change })
}

/// Gaussian correlation log-likelihood
/// `-(TN/2) ln 2pi - 1/2 sum_t (ln|R_t| + e_t R_t^-1 e_t')`.
pub fn correlation_loglik(path: &CorrelationPath, residuals: &DMatrix<f64>) -> Result<f64> {
    let (t, n) = residuals.shape();
    if path.len() != t || path.matrices.iter().any(|m| m.nrows() != n) {
        return Err(Error::invalid("path and residuals differ in shape"));
    }
    let mut work = vec![0.0; n * n + n];
    let mut e = vec![0.0; n];
    let mut total = -0.5 * (t * n) as f64 * LN_2PI;
    for (k, m) in path.matrices.iter().enumerate() {
        for i in 0..n {
            e[i] = residuals[(k, i)];
        }
        let (ld, q) = linalg::logdet_and_quadform(&linalg::to_row_major(m), &e, n, &mut work)
            .ok_or(Error::NotPositiveDefinite { t: k })?;
        total -= 0.5 * (ld + q);
    }
    Ok(total)
}

/// Per-observation log-likelihood terms, computed without storing the path.
pub(crate) fn loglik_contributions(params: &CorrParams, inputs: &CorrInputs, rbar: Option<&DMatrix<f64>>) -> Result<Vec<f64>> {
    let n = inputs.n_assets();
    let mut work = vec![0.0; n * n + n];
    let mut out = Vec::with_capacity(inputs.len());
    let c = -0.5 * n as f64 * LN_2PI;
    for_each_correlation(params, inputs, rbar, |t, r, _| {
        let (ld, q) =
            linalg::logdet_and_quadform(r, inputs.row(t), n, &mut work).ok_or(Error::NotPositiveDefinite { t })?;
        out.push(c - 0.5 * (ld + q));
        Ok(())
    })?;
    Ok(out)
}

/// Total log-likelihood, computed without storing the path.
pub(crate) fn loglik_total(params: &CorrParams, inputs: &CorrInputs, rbar: Option<&DMatrix<f64>>) -> Result<f64> {
    let n = inputs.n_assets();
    let mut work = vec![0.0; n * n + n];
    let mut total = -0.5 * (inputs.len() * n) as f64 * LN_2PI;
    for_each_correlation(params, inputs, rbar, |t, r, _| {
        let (ld, q) =
            linalg::logdet_and_quadform(r, inputs.row(t), n, &mut work).ok_or(Error::NotPositiveDefinite { t })?;
        total -= 0.5 * (ld + q);
        Ok(())
    })?;
    Ok(total)
}
