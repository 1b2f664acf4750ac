//! Loads the bundled data set, aligns the exogenous index and the regime
//! calendar, and prints summary statistics, rolling correlations and
//! per-regime correlation matrices.
//!
//! cargo run --release --example describe_data [data-dir]

use std::path::PathBuf;

use condcorr::data::{align, load_calendar, load_panel, load_series, rolling_correlation, subsample_correlations, CsvOptions};

fn main() -> condcorr::Result<()> {
    let dir = std::env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("data/synthetic"));
    let opts = CsvOptions::default();
    let panel = load_panel(dir.join("returns.csv"), &opts)?.panel;
    let raw = load_series(dir.join("exogenous.csv"), &opts, None)?;
    let calendar = load_calendar(dir.join("calendar.toml"))?;
    let (panel, exog, regimes) = align(&panel, &raw, &calendar)?;
    let names = panel.asset_names();
    let dates = panel.dates();

    println!("{} observations, {} to {}", panel.len(), dates[0], dates[panel.len() - 1]);
    println!("{:<10}{:>10}{:>10}{:>10}{:>10}", "asset", "mean", "sd", "min", "max");
    for (i, name) in names.iter().enumerate() {
        let x = panel.column(i);
        let m = x.iter().sum::<f64>() / x.len() as f64;
        let sd = (x.iter().map(|v| (v - m).powi(2)).sum::<f64>() / (x.len() - 1) as f64).sqrt();
        let lo = x.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = x.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        println!("{name:<10}{m:>10.4}{sd:>10.4}{lo:>10.3}{hi:>10.3}");
    }
    println!("exogenous mean {:.4}", exog.sample_mean);

    // 60-day rolling correlation of the first and last asset, every 250 days
    let last = panel.n_assets() - 1;
    let rolling = rolling_correlation(&panel, (0, last), 60)?;
    println!("\nrolling 60-day correlation {}-{}:", names[0], names[last]);
    for (date, rho) in rolling.iter().step_by(250) {
        println!("  {date}  {}", rho.map_or("n/a".into(), |r| format!("{r:+.3}")));
    }

    // correlation matrix within each regime spell
    let mut spell_start = 0;
    for t in 1..=panel.len() {
        if t == panel.len() || regimes.dummy[t] != regimes.dummy[spell_start] {
            let s = subsample_correlations(&panel, Some(&exog), dates[spell_start], dates[t - 1])?;
            println!(
                "\nregime {} from {} to {} ({} days, exogenous mean {:.3}):",
                regimes.dummy[spell_start],
                dates[spell_start],
                dates[t - 1],
                s.n_obs,
                s.exog_mean.unwrap_or(f64::NAN)
            );
            for i in 0..panel.n_assets() {
                let row: Vec<String> = (0..=i).map(|j| format!("{:+.3}", s.correlation[(i, j)])).collect();
                println!("  {:<8}{}", names[i], row.join(" "));
            }
            spell_start = t;
        }
    }
    Ok(())
}
