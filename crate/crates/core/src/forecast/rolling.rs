use chrono::NaiveDate;
use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corrmodels::{build_path, estimate_all, CorrInputs, EstimateOptions, ModelKind};
use crate::data::{ExogenousSeries, RegimeCalendar, ReturnPanel};
use crate::error::{Error, Result};
use crate::garch::{fit_gjr_with, gjr_variance_path, GarchOptions};

/// Fixed-length estimation window rolled forward by `block_length`
/// observations `n_blocks` times.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RollingScheme {
    pub window_length: usize,
    pub block_length: usize,
    pub n_blocks: usize,
}

impl RollingScheme {
    pub const MIN_WINDOW: usize = 500;

    pub fn new(window_length: usize, block_length: usize, n_blocks: usize) -> Result<Self> {
        let s = RollingScheme { window_length, block_length, n_blocks };
        if window_length < Self::MIN_WINDOW {
            return Err(Error::invalid(format!("estimation window must hold at least {} observations", Self::MIN_WINDOW)));
        }
        if block_length == 0 || n_blocks == 0 {
            return Err(Error::invalid("block length and number of blocks must be positive"));
        }
        Ok(s)
    }

    pub fn n_forecasts(&self) -> usize {
        self.block_length * self.n_blocks
    }

    pub fn required_len(&self) -> usize {
        self.window_length + self.n_forecasts()
    }

    /// Estimation window of block `b`.
    pub fn window(&self, b: usize) -> std::ops::Range<usize> {
        let s = b * self.block_length;
        s..s + self.window_length
    }

    /// Forecast targets of block `b`.
    pub fn targets(&self, b: usize) -> std::ops::Range<usize> {
        let s = b * self.block_length + self.window_length;
        s..s + self.block_length
    }
}

#[derive(Debug, Clone, Default)]
pub struct ForecastOptions {
    pub garch: GarchOptions,
    pub estimate: EstimateOptions,
}

/// One-step-ahead covariance forecasts `H_tau = S_tau R_tau S_tau` of one
/// model and the realized returns they are scored against.
#[derive(Debug, Clone)]
pub struct ForecastRun {
    pub model: String,
    pub dates: Vec<NaiveDate>,
    pub forecasts: Vec<DMatrix<f64>>,
    /// Realized return vectors `r_tau`; the covariance proxy is `r r'`.
    pub realized: Vec<DVector<f64>>,
    /// Per block: whether both estimation steps converged.
    pub block_converged: Vec<bool>,
}

impl ForecastRun {
    pub fn len(&self) -> usize {
        self.forecasts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.forecasts.is_empty()
    }

    /// Realized covariance proxy `r_tau r_tau'`.
    pub fn proxy(&self, tau: usize) -> DMatrix<f64> {
        let r = &self.realized[tau];
        r * r.transpose()
    }
}

pub fn rolling_forecast(
    kind: ModelKind,
    panel: &ReturnPanel,
    exog: Option<&ExogenousSeries>,
    regimes: Option<&RegimeCalendar>,
    scheme: &RollingScheme,
    opts: &ForecastOptions,
) -> Result<ForecastRun> {
    Ok(rolling_forecast_many(&[kind], panel, exog, regimes, scheme, opts)?.remove(0))
}

/// Runs the rolling scheme for several models at once, sharing the
/// first-step fits and nested warm starts within each block. Blocks are
/// processed in parallel; results are ordered as `kinds`.
///
/// In each block both steps are re-estimated on the window. Parameters are
/// then frozen and the variance and correlation recursions run through the
/// block on realized returns, so each forecast uses information up to the
/// previous day: the lagged exogenous value and the regime dummy, which is
/// known in advance from the calendar. The exogenous mean stays at its
/// window value.
pub fn rolling_forecast_many(
    kinds: &[ModelKind],
    panel: &ReturnPanel,
    exog: Option<&ExogenousSeries>,
    regimes: Option<&RegimeCalendar>,
    scheme: &RollingScheme,
    opts: &ForecastOptions,
) -> Result<Vec<ForecastRun>> {
    if kinds.is_empty() {
        return Err(Error::invalid("no models to forecast"));
    }
    if panel.len() < scheme.required_len() {
        return Err(Error::invalid(format!(
            "rolling scheme needs {} observations, data have {}",
            scheme.required_len(),
            panel.len()
        )));
    }
    for (what, len) in [("exogenous series", exog.map(|x| x.len())), ("regime calendar", regimes.map(|d| d.len()))] {
        if let Some(len) = len {
            if len != panel.len() {
                return Err(Error::invalid(format!("{what} has {len} values for {} observations", panel.len())));
            }
        }
    }

    let blocks: Vec<Vec<BlockOutput>> = (0..scheme.n_blocks)
        .into_par_iter()
        .map(|b| forecast_block(kinds, panel, exog, regimes, scheme, b, opts).map_err(|e| Error::Block { block: b, source: Box::new(e) }))
        .collect::<Result<_>>()?;

    let dates: Vec<NaiveDate> =
        (0..scheme.n_blocks).flat_map(|b| scheme.targets(b)).map(|t| panel.dates()[t]).collect();
    let realized: Vec<DVector<f64>> = (0..scheme.n_blocks)
        .flat_map(|b| scheme.targets(b))
        .map(|t| panel.returns().row(t).transpose())
        .collect();
    Ok(kinds
        .iter()
        .enumerate()
        .map(|(k, kind)| ForecastRun {
            model: kind.label().to_string(),
            dates: dates.clone(),
            forecasts: blocks.iter().flat_map(|bl| bl[k].forecasts.iter().cloned()).collect(),
            realized: realized.clone(),
            block_converged: blocks.iter().map(|bl| bl[k].converged).collect(),
        })
        .collect())
}

struct BlockOutput {
    forecasts: Vec<DMatrix<f64>>,
    converged: bool,
}

fn forecast_block(
    kinds: &[ModelKind],
    panel: &ReturnPanel,
    exog: Option<&ExogenousSeries>,
    regimes: Option<&RegimeCalendar>,
    scheme: &RollingScheme,
    b: usize,
    opts: &ForecastOptions,
) -> Result<Vec<BlockOutput>> {
    let window = scheme.window(b);
    let span = window.start..scheme.targets(b).end;
    let n = panel.n_assets();
    let w_len = window.len();

    // first step on the window, variances extended through the block
    let mut garch_ok = true;
    let mut sd = DMatrix::zeros(span.len(), n);
    for i in 0..n {
        let col = panel.column(i);
        let fit = fit_gjr_with(&col[window.clone()], &opts.garch)?;
        garch_ok &= fit.converged;
        let h = gjr_variance_path(&fit.params, &col[span.clone()], fit.h0)?;
        for (s, v) in h.iter().enumerate() {
            sd[(s, i)] = v.sqrt();
        }
    }
    let r = panel.returns();
    let eps = DMatrix::from_fn(span.len(), n, |s, i| r[(span.start + s, i)] / sd[(s, i)]);

    let exog_window = exog.map(|x| x.window(window.clone())).transpose()?;
    let exog_span = exog.map(|x| x.window(span.clone())).transpose()?;
    let reg_window = regimes.map(|d| d.window(window.clone())).transpose()?;
    let reg_span = regimes.map(|d| d.window(span.clone())).transpose()?;
    let est_eps = eps.rows(0, w_len).into_owned();
    let est_inputs = CorrInputs::new(&est_eps, exog_window.as_ref(), reg_window.as_ref())?;
    let mut span_inputs = CorrInputs::new(&eps, exog_span.as_ref(), reg_span.as_ref())?;
    if let Some(x) = &exog_window {
        span_inputs = span_inputs.with_xbar(x.sample_mean);
    }

    let fits = estimate_all(kinds, &est_inputs, &opts.estimate)?;
    fits.into_iter()
        .map(|fit| {
            let path = build_path(&fit.params, &span_inputs, fit.targeting.as_ref())?;
            let forecasts = (w_len..span.len())
                .map(|s| {
                    let rm = &path.matrices[s];
                    DMatrix::from_fn(n, n, |i, j| sd[(s, i)] * rm[(i, j)] * sd[(s, j)])
                })
                .collect();
            Ok(BlockOutput { forecasts, converged: garch_ok && fit.converged })
        })
        .collect()
}
