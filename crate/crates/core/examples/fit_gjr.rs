//! Fits a GJR-GARCH(1,1) model to every asset of the bundled data set and
//! prints estimates with robust standard errors.
//!
//! cargo run --release --example fit_gjr

use std::path::PathBuf;

use condcorr::data::{load_panel, CsvOptions};
use condcorr::garch::{fit_panel, GarchOptions};

fn main() -> condcorr::Result<()> {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("data/synthetic/returns.csv");
    let panel = load_panel(path, &CsvOptions::default())?.panel;
    let fits = fit_panel(&panel, &GarchOptions::default())?;

    println!("{:<8}{:>20}{:>20}{:>20}{:>20}{:>12}", "asset", "omega", "alpha", "beta", "gamma", "persistence");
    for (name, fit) in panel.asset_names().iter().zip(&fits) {
        let se = fit.robust_se.unwrap_or([f64::NAN; 4]);
        let cell = |v: f64, s: f64| format!("{v:.4} ({s:.4})");
        let p = &fit.params;
        println!(
            "{name:<8}{:>20}{:>20}{:>20}{:>20}{:>12.4}",
            cell(p.omega, se[0]),
            cell(p.alpha, se[1]),
            cell(p.beta, se[2]),
            cell(p.gamma, se[3]),
            p.persistence()
        );
    }
    println!("\nloglik: {}", fits.iter().map(|f| format!("{:.2}", f.loglik)).collect::<Vec<_>>().join(", "));
    println!("all converged: {}", fits.iter().all(|f| f.converged));
    Ok(())
}
