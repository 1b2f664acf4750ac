//! Two-step estimation of the nine correlation models on the bundled data
//! set: GJR-GARCH per asset, then every correlation specification with
//! nested warm starts. Prints likelihoods, information criteria and the
//! dynamic parameters.
//!
//! cargo run --release --example estimate_models

use std::path::PathBuf;

use condcorr::corrmodels::{estimate_all, CorrInputs, EstimateOptions, ModelKind};
use condcorr::data::{align, load_calendar, load_panel, load_series, CsvOptions};
use condcorr::garch::{degarch, fit_panel, GarchOptions};
use condcorr::inference::fit_information_criteria;

fn main() -> condcorr::Result<()> {
    let dir = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("data/synthetic");
    let opts = CsvOptions::default();
    let panel = load_panel(dir.join("returns.csv"), &opts)?.panel;
    let raw = load_series(dir.join("exogenous.csv"), &opts, None)?;
    let (panel, exog, regimes) = align(&panel, &raw, &load_calendar(dir.join("calendar.toml"))?)?;

    let garch = fit_panel(&panel, &GarchOptions::default())?;
    let residuals = degarch(&panel, &garch)?;
    let inputs = CorrInputs::new(&residuals, Some(&exog), Some(&regimes))?;
    let fits = estimate_all(&ModelKind::ALL, &inputs, &EstimateOptions::default())?;

    println!("{:<14}{:>5}{:>14}{:>10}{:>10}  converged", "model", "k", "loglik", "AIC", "BIC");
    for fit in &fits {
        let ic = fit_information_criteria(fit);
        println!(
            "{:<14}{:>5}{:>14.2}{:>10.4}{:>10.4}  {}",
            fit.kind().label(),
            fit.spec.parameter_count,
            fit.loglik,
            ic.aic,
            ic.bic,
            fit.converged
        );
    }

    println!("\ndynamic parameters (robust SE):");
    for fit in fits.iter().filter(|f| f.kind().is_dcc()) {
        let cells: Vec<String> = fit
            .names
            .iter()
            .map(|n| format!("{n} {:.4} ({:.4})", fit.value(n).unwrap(), fit.se(n).unwrap_or(f64::NAN)))
            .collect();
        println!("  {:<14}{}", fit.kind().label(), cells.join("  "));
    }
    for fit in fits.iter().filter(|f| matches!(f.kind(), ModelKind::StccTue | ModelKind::StccTupe)) {
        let cells: Vec<String> = fit
            .names
            .iter()
            .filter(|n| n.starts_with("phi") || n.starts_with("c"))
            .map(|n| format!("{n} {:.4}", fit.value(n).unwrap()))
            .collect();
        println!("  {:<14}{}", fit.kind().label(), cells.join("  "));
    }
    Ok(())
}
