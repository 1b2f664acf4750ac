//! Rolling out-of-sample covariance forecasts, forecast losses and the model
//! confidence set.

mod loss;
mod mcs;
mod rolling;

pub use loss::{gmv_loss, gmv_series, qlike_loss, qlike_series, qlike_with_proxy};
pub use mcs::{mcs, McsEntry, McsOptions, McsResult, McsStatistic};
pub use rolling::{rolling_forecast, rolling_forecast_many, ForecastOptions, ForecastRun, RollingScheme};
