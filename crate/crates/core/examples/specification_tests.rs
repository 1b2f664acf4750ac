//! Specification tests on the bundled data set: LR tests for the nested
//! model pairs, LM tests of constant correlation against the smooth
//! transition alternatives, Wald tests of equal correlations across
//! regimes, and Ljung-Box tests on cross products of de-garched returns.
//!
//! cargo run --release --example specification_tests

use std::path::PathBuf;

use condcorr::corrmodels::{estimate_all, CorrInputs, EstimateOptions, ModelKind};
use condcorr::data::{align, load_calendar, load_panel, load_series, CsvOptions};
use condcorr::garch::{degarch, fit_panel, GarchOptions};
use condcorr::inference::{
    cross_product, ljung_box, lm_test_constant_correlation, lr_test, wald_equal_correlations, TestResult,
};

fn show(t: &TestResult) {
    println!(
        "  {:<34}{:>12.4}  df {:>2}  crit {:>8.4}  p {:.4}{}",
        t.name,
        t.statistic,
        t.df,
        t.critical_value_5pct,
        t.p_value,
        if t.reject { "  reject" } else { "" }
    );
}

fn main() -> condcorr::Result<()> {
    let dir = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("data/synthetic");
    let opts = CsvOptions::default();
    let panel = load_panel(dir.join("returns.csv"), &opts)?.panel;
    let raw = load_series(dir.join("exogenous.csv"), &opts, None)?;
    let (panel, exog, regimes) = align(&panel, &raw, &load_calendar(dir.join("calendar.toml"))?)?;
    let residuals = degarch(&panel, &fit_panel(&panel, &GarchOptions::default())?)?;
    let inputs = CorrInputs::new(&residuals, Some(&exog), Some(&regimes))?;
    let fits = estimate_all(&ModelKind::ALL, &inputs, &EstimateOptions::default())?;
    let fit = |k: ModelKind| fits.iter().find(|f| f.kind() == k).expect("estimated");

    println!("constant correlation:");
    show(&lr_test(fit(ModelKind::Ccc), fit(ModelKind::CccPe))?);
    for (null, alt) in [(ModelKind::Ccc, ModelKind::StccTue), (ModelKind::CccPe, ModelKind::StccTupe)] {
        let mut t = lm_test_constant_correlation(fit(null), &inputs)?;
        t.name = format!("LM {alt} vs {null}");
        show(&t);
    }

    // pairs of every asset with the last one
    let n = panel.n_assets();
    let pairs: Vec<(usize, usize)> = (0..n - 1).map(|i| (i, n - 1)).collect();
    println!("equal correlations with {} across regime matrices:", panel.asset_names()[n - 1]);
    for k in [ModelKind::CccPe, ModelKind::StccTue, ModelKind::StccTupe] {
        let mut t = wald_equal_correlations(fit(k), &pairs)?;
        t.name = format!("Wald {k}");
        show(&t);
    }

    println!("nested models:");
    for (r, u) in ModelKind::NESTED_COMPARISONS {
        show(&lr_test(fit(r), fit(u))?);
    }

    println!("Ljung-Box(10) on cross products:");
    let names = panel.asset_names();
    for i in 0..n {
        for j in 0..i {
            let mut t = ljung_box(&cross_product(&residuals, i, j), 10)?.pop().expect("ten lags");
            t.name = format!("{}-{}", names[i], names[j]);
            show(&t);
        }
    }
    Ok(())
}
