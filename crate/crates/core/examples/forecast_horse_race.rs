//! Out-of-sample horse race on the bundled data set: rolling one-step
//! covariance forecasts (2049-day window re-estimated every 60 days, ten
//! blocks), QLike and GMV losses, and model confidence sets with the range
//! and semi-quadratic statistics.
//!
//! cargo run --release --example forecast_horse_race [model ...]

use std::path::PathBuf;

use condcorr::corrmodels::ModelKind;
use condcorr::data::{align, load_calendar, load_panel, load_series, CsvOptions};
use condcorr::forecast::{gmv_series, mcs, qlike_series, rolling_forecast_many, ForecastOptions, McsOptions, McsStatistic, RollingScheme};

fn main() -> condcorr::Result<()> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let kinds: Vec<ModelKind> = if args.is_empty() {
        vec![ModelKind::Ccc, ModelKind::StccTue, ModelKind::Dcc, ModelKind::DccPe, ModelKind::DccTupe]
    } else {
        args.iter().map(|a| a.parse()).collect::<condcorr::Result<_>>()?
    };

    let dir = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("data/synthetic");
    let opts = CsvOptions::default();
    let panel = load_panel(dir.join("returns.csv"), &opts)?.panel;
    let raw = load_series(dir.join("exogenous.csv"), &opts, None)?;
    let (panel, exog, regimes) = align(&panel, &raw, &load_calendar(dir.join("calendar.toml"))?)?;

    let scheme = RollingScheme::new(2049, 60, 10)?;
    let runs = rolling_forecast_many(&kinds, &panel, Some(&exog), Some(&regimes), &scheme, &ForecastOptions::default())?;
    let names: Vec<String> = runs.iter().map(|r| r.model.clone()).collect();
    let qlike: Vec<Vec<f64>> = runs.iter().map(|r| qlike_series(&r.forecasts, &r.realized)).collect::<condcorr::Result<_>>()?;
    let gmv: Vec<Vec<f64>> = runs.iter().map(|r| gmv_series(&r.forecasts)).collect::<condcorr::Result<_>>()?;

    let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
    println!("{} forecasts per model", scheme.n_forecasts());
    println!("{:<14}{:>12}{:>12}", "model", "QLike", "GMV");
    for k in 0..runs.len() {
        println!("{:<14}{:>12.4}{:>12.4}", names[k], mean(&qlike[k]), mean(&gmv[k]));
    }

    for (loss, series) in [("QLike", &qlike), ("GMV", &gmv)] {
        for statistic in [McsStatistic::Range, McsStatistic::SemiQuadratic] {
            let r = mcs(&names, series, &McsOptions { statistic, ..McsOptions::default() })?;
            println!("\nMCS {loss} {statistic:?} (alpha {}):", r.alpha);
            for e in &r.ladder {
                println!("  {:<14}p {:.4}{}", e.model, e.p_value, if e.survivor { "  *" } else { "" });
            }
        }
    }
    Ok(())
}
