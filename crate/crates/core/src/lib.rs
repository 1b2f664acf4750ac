//! Conditional correlation models driven by an exogenous uncertainty index
//! and a deterministic regime calendar.
//!
//! The pipeline is two-step: univariate GJR-GARCH fits de-garch the returns
//! ([`garch`]), then one of nine correlation specifications is fitted to the
//! standardized residuals ([`corrmodels`]). [`inference`] provides robust
//! standard errors and specification tests, and [`forecast`] runs rolling
//! covariance forecasts ranked with the model confidence set.

pub mod cli;
pub mod corrmodels;
pub mod data;
pub mod error;
pub mod forecast;
pub mod garch;
pub mod inference;
pub mod linalg;
pub mod optim;

pub use error::{Error, Result};
