use nalgebra::{DMatrix, DVector};

use super::ForecastRun;
use crate::error::{Error, Result};
use crate::linalg;

/// Per-period QLike `ln|H| + r' H^-1 r`, i.e. `ln|H| + tr(H^-1 r r')`.
pub fn qlike_series(forecasts: &[DMatrix<f64>], realized: &[DVector<f64>]) -> Result<Vec<f64>> {
    if forecasts.len() != realized.len() {
        return Err(Error::invalid(format!("{} forecasts for {} realizations", forecasts.len(), realized.len())));
    }
    forecasts
        .iter()
        .zip(realized)
        .enumerate()
        .map(|(t, (h, r))| {
            let n = h.nrows();
            let mut work = vec![0.0; n * n + n];
            let (ld, q) = linalg::logdet_and_quadform(&linalg::to_row_major(h), r.as_slice(), n, &mut work)
                .ok_or(Error::NotPositiveDefinite { t })?;
            Ok(ld + q)
        })
        .collect()
}

/// QLike `ln|H| + tr(H^-1 C)` for a general covariance proxy `C`.
pub fn qlike_with_proxy(forecast: &DMatrix<f64>, proxy: &DMatrix<f64>) -> Result<f64> {
    let n = forecast.nrows();
    if proxy.shape() != (n, n) {
        return Err(Error::invalid("forecast and proxy differ in shape"));
    }
    let chol = forecast.clone().cholesky().ok_or(Error::NotPositiveDefinite { t: 0 })?;
    let logdet = 2.0 * chol.l().diagonal().iter().map(|d| d.ln()).sum::<f64>();
    Ok(logdet + chol.solve(proxy).trace())
}

/// Per-period variance of the global minimum variance portfolio with
/// weights `sqrt(n) H^-1 j / (j' H^-1 j)`, which equals `n / (j' H^-1 j)`.
pub fn gmv_series(forecasts: &[DMatrix<f64>]) -> Result<Vec<f64>> {
    forecasts
        .iter()
        .enumerate()
        .map(|(t, h)| {
            let n = h.nrows();
            let chol = h.clone().cholesky().ok_or(Error::NotPositiveDefinite { t })?;
            let ones = DVector::from_element(n, 1.0);
            let hj = chol.solve(&ones);
            let denom = ones.dot(&hj);
            let w = hj * ((n as f64).sqrt() / denom);
            Ok(w.dot(&(h * &w)))
        })
        .collect()
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

pub fn qlike_loss(run: &ForecastRun) -> Result<f64> {
    Ok(mean(&qlike_series(&run.forecasts, &run.realized)?))
}

pub fn gmv_loss(run: &ForecastRun) -> Result<f64> {
    Ok(mean(&gmv_series(&run.forecasts)?))
}
