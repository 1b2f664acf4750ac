use std::fmt::Write as _;
use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::Path;

use chrono::NaiveDate;
use nalgebra::DMatrix;
use serde::Serialize;
use serde_json::json;

use super::config::RunConfig;
use super::report::{fit_block, garch_table, mcs_block, sig6, test_line};
use super::CliError;
use crate::corrmodels::{
    estimate_all, logistic_transition, lower_pairs, simulate as draw, synthetic_exogenous, synthetic_regimes,
    CorrFitResult, CorrInputs, CorrParams, CorrelationPath, DccParams, EstimateOptions, ModelKind, SimulationSetup,
    TransitionParams,
};
use crate::data::{
    align, align_calendar, load_calendar, load_panel, load_series, log_returns, rolling_correlation, write_panel,
    write_series, CalendarSpec, CsvOptions, ExogenousSeries, RegimeCalendar, ReturnPanel,
};
use crate::forecast::{gmv_series, mcs, qlike_series, rolling_forecast_many, ForecastOptions, McsOptions, McsResult};
use crate::garch::{degarch, fit_panel, GarchFit, GarchOptions, GjrParams};
use crate::inference::{
    cross_product, fit_information_criteria, ljung_box, lm_test_constant_correlation, lr_test,
    wald_equal_correlations, InformationCriteria, TestResult,
};
use crate::linalg;

type CmdResult = Result<i32, CliError>;

fn usage(e: impl std::fmt::Display) -> CliError {
    CliError::Usage(e.to_string())
}

fn slug(kind: ModelKind) -> String {
    kind.label().to_ascii_lowercase().replace('-', "_")
}

fn write_text(path: &Path, text: &str) -> Result<(), CliError> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir)?;
    }
    fs::write(path, text)?;
    Ok(())
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    let text = serde_json::to_string_pretty(value).map_err(|e| CliError::Numerical(e.to_string()))?;
    write_text(path, &(text + "\n"))
}

fn create(path: &Path) -> Result<BufWriter<File>, CliError> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir)?;
    }
    Ok(BufWriter::new(File::create(path)?))
}

struct Dataset {
    panel: ReturnPanel,
    exog: Option<ExogenousSeries>,
    regimes: Option<RegimeCalendar>,
    dropped_rows: usize,
}

fn load_data(cfg: &RunConfig) -> Result<Dataset, CliError> {
    let d = &cfg.data;
    let path = d.returns.as_ref().ok_or_else(|| usage("config has no data.returns file"))?;
    let opts = CsvOptions {
        delimiter: d.delimiter as u8,
        date_column: d.date_column.clone(),
        columns: d.assets.as_ref().map(|a| a.iter().map(|n| (n.clone(), n.clone())).collect()),
    };
    let loaded = load_panel(path, &opts).map_err(usage)?;
    let mut panel = loaded.panel;
    if d.prices {
        panel = log_returns(&panel).map_err(usage)?;
    }
    let start = cfg.estimation.start.as_ref().map(|s| s.parse()).transpose().map_err(usage)?;
    let end = cfg.estimation.end.as_ref().map(|s| s.parse()).transpose().map_err(usage)?;
    if start.is_some() || end.is_some() {
        let range =
            panel.date_range(start.unwrap_or(NaiveDate::MIN), end.unwrap_or(NaiveDate::MAX));
        if range.len() < 2 {
            return Err(usage("estimation date range selects fewer than two observations"));
        }
        panel = panel.slice(range).map_err(usage)?;
    }
    let calendar = match &d.calendar {
        Some(p) => Some(load_calendar(p).map_err(usage)?),
        None => None,
    };
    let (exog, regimes) = match &d.exogenous {
        Some(p) => {
            let raw = load_series(p, &CsvOptions { columns: None, ..opts.clone() }, d.exogenous_column.as_deref())
                .map_err(usage)?;
            // without a calendar every day is in the first regime
            let spec = calendar.clone().unwrap_or(CalendarSpec { initial_regime: 1, switches: Vec::new() });
            let (p2, x, r) = align(&panel, &raw, &spec).map_err(usage)?;
            panel = p2;
            (Some(x), calendar.as_ref().map(|_| r))
        }
        None => (None, calendar.as_ref().map(|c| align_calendar(panel.dates(), c)).transpose().map_err(usage)?),
    };
    Ok(Dataset { panel, exog, regimes, dropped_rows: loaded.dropped_rows })
}

fn check_inputs(kinds: &[ModelKind], data: &Dataset) -> Result<(), CliError> {
    for k in kinds {
        if k.uses_exogenous() && data.exog.is_none() {
            return Err(usage(format!("{k} needs data.exogenous")));
        }
        if k.uses_regime() && data.regimes.is_none() {
            return Err(usage(format!("{k} needs data.calendar")));
        }
    }
    Ok(())
}

fn garch_options(cfg: &RunConfig) -> GarchOptions {
    let mut o = GarchOptions::default();
    o.optim.seed = cfg.seed;
    o.robust_se = cfg.estimation.robust_se.unwrap_or(true);
    o
}

fn estimate_options(cfg: &RunConfig) -> EstimateOptions {
    let mut o = EstimateOptions::default();
    o.optim.seed = cfg.seed;
    o.robust_se = cfg.estimation.robust_se.unwrap_or(true);
    o
}

struct Fitted {
    garch: Vec<GarchFit>,
    residuals: DMatrix<f64>,
    inputs: CorrInputs,
    fits: Vec<CorrFitResult>,
}

fn fit_models(cfg: &RunConfig, data: &Dataset, kinds: &[ModelKind]) -> Result<Fitted, CliError> {
    check_inputs(kinds, data)?;
    let garch = fit_panel(&data.panel, &garch_options(cfg))?;
    let residuals = degarch(&data.panel, &garch)?;
    let inputs = CorrInputs::new(&residuals, data.exog.as_ref(), data.regimes.as_ref())?;
    let fits = estimate_all(kinds, &inputs, &estimate_options(cfg))?;
    Ok(Fitted { garch, residuals, inputs, fits })
}

fn garch_document(names: &[String], fits: &[GarchFit]) -> serde_json::Value {
    json!(names
        .iter()
        .zip(fits)
        .map(|(n, f)| json!({
            "asset": n,
            "omega": f.params.omega,
            "alpha": f.params.alpha,
            "beta": f.params.beta,
            "gamma": f.params.gamma,
            "robust_se": f.robust_se,
            "initial_variance": f.h0,
            "loglik": f.loglik,
            "converged": f.converged,
        }))
        .collect::<Vec<_>>())
}

fn data_summary(data: &Dataset) -> String {
    let p = &data.panel;
    let mut s = format!(
        "Data: {} observations, {} assets ({}), {} to {}",
        p.len(),
        p.n_assets(),
        p.asset_names().join(", "),
        p.dates()[0],
        p.dates()[p.len() - 1]
    );
    if data.dropped_rows > 0 {
        let _ = write!(s, ", {} incomplete rows dropped", data.dropped_rows);
    }
    s.push('\n');
    s
}

pub fn estimate(cfg: &RunConfig) -> CmdResult {
    let kinds = cfg.model_kinds().map_err(usage)?;
    let data = load_data(cfg)?;
    let fitted = fit_models(cfg, &data, &kinds)?;
    let names = data.panel.asset_names();

    write_json(&cfg.out.join("garch.json"), &garch_document(names, &fitted.garch))?;
    let mut report = data_summary(&data);
    report.push('\n');
    report.push_str(&garch_table(names, &fitted.garch));
    report.push_str("\nSecond step: correlation models\n");
    let mut written = std::collections::BTreeSet::new();
    for fit in &fitted.fits {
        report.push_str(&fit_block(fit));
        if !written.insert(fit.kind()) {
            continue;
        }
        write_json(&cfg.out.join("fits").join(format!("{}.json", slug(fit.kind()))), &fit.document(names))?;
        let w = create(&cfg.out.join("paths").join(format!("{}.csv", slug(fit.kind()))))?;
        fit.correlation_path.write_long(data.panel.dates(), names, w, b',')?;
    }
    write_text(&cfg.out.join("estimate_report.txt"), &report)?;
    print!("{report}");

    let all_converged = fitted.garch.iter().all(|g| g.converged) && fitted.fits.iter().all(|f| f.converged);
    if !all_converged {
        eprintln!("condcorr: at least one fit did not converge");
    }
    Ok(if all_converged { 0 } else { 1 })
}

#[derive(Serialize)]
struct IcRow {
    model: String,
    loglik: f64,
    parameters: usize,
    #[serde(flatten)]
    criteria: InformationCriteria,
}

#[derive(Serialize)]
struct PairTests {
    pair: [String; 2],
    tests: Vec<TestResult>,
}

#[derive(Serialize, Default)]
struct TestDocument {
    information_criteria: Vec<IcRow>,
    constant_correlation: Vec<TestResult>,
    stock_bond: Vec<TestResult>,
    nested: Vec<TestResult>,
    ljung_box: Vec<PairTests>,
}

pub fn test(cfg: &RunConfig) -> CmdResult {
    let requested = cfg.model_kinds().map_err(usage)?;
    let data = load_data(cfg)?;
    let has = |k: ModelKind| requested.contains(&k);

    let lr_pairs: Vec<(ModelKind, ModelKind)> = match &cfg.tests.lr_pairs {
        Some(pairs) => pairs
            .iter()
            .map(|[a, b]| {
                let (r, u) = (a.parse::<ModelKind>().map_err(usage)?, b.parse::<ModelKind>().map_err(usage)?);
                if r != u && !r.is_nested_in(u) {
                    return Err(usage(format!("{r} is not nested in {u}")));
                }
                Ok((r, u))
            })
            .collect::<Result<_, CliError>>()?,
        None => ModelKind::NESTED_COMPARISONS.iter().copied().filter(|(r, u)| has(*r) && has(*u)).collect(),
    };
    let mut kinds = requested.clone();
    kinds.extend(lr_pairs.iter().flat_map(|(r, u)| [*r, *u]));
    if has(ModelKind::StccTue) {
        kinds.push(ModelKind::Ccc);
    }
    if has(ModelKind::StccTupe) {
        kinds.push(ModelKind::CccPe);
    }
    let mut unique = kinds.clone();
    unique.sort();
    unique.dedup();
    let fitted = fit_models(cfg, &data, &unique)?;
    let fit_of = |k: ModelKind| fitted.fits.iter().find(|f| f.kind() == k).expect("estimated");

    let mut doc = TestDocument::default();
    let mut report = data_summary(&data);

    let _ = writeln!(report, "\na) Information criteria (per observation)");
    let _ = writeln!(report, "{:<16}{:>16}{:>6}{:>14}{:>14}", "model", "loglik", "k", "AIC", "BIC");
    let mut seen = Vec::new();
    for &k in &requested {
        if seen.contains(&k) {
            continue;
        }
        seen.push(k);
        let f = fit_of(k);
        let ic = fit_information_criteria(f);
        let _ = writeln!(
            report,
            "{:<16}{:>16}{:>6}{:>14}{:>14}",
            k.label(),
            sig6(f.loglik),
            f.spec.parameter_count,
            sig6(ic.aic),
            sig6(ic.bic)
        );
        doc.information_criteria.push(IcRow {
            model: k.label().into(),
            loglik: f.loglik,
            parameters: f.spec.parameter_count,
            criteria: ic,
        });
    }

    let _ = writeln!(report, "\nb) Constant correlations");
    if has(ModelKind::Ccc) && has(ModelKind::CccPe) {
        doc.constant_correlation.push(lr_test(fit_of(ModelKind::Ccc), fit_of(ModelKind::CccPe))?);
    }
    if has(ModelKind::StccTue) {
        let mut t = lm_test_constant_correlation(fit_of(ModelKind::Ccc), &fitted.inputs)?;
        t.name = "LM STCC-TUE vs CCC".into();
        doc.constant_correlation.push(t);
    }
    if has(ModelKind::StccTupe) {
        let mut t = lm_test_constant_correlation(fit_of(ModelKind::CccPe), &fitted.inputs)?;
        t.name = "LM STCC-TUPE vs CCC-PE".into();
        doc.constant_correlation.push(t);
    }
    for t in &doc.constant_correlation {
        let _ = writeln!(report, "{}", test_line(t));
    }

    let n = data.panel.n_assets();
    let wald_pairs: Vec<(usize, usize)> = match &cfg.tests.wald_pairs {
        Some(p) => p.iter().map(|[i, j]| (*i, *j)).collect(),
        None => (0..n - 1).map(|i| (i, n - 1)).collect(),
    };
    if wald_pairs.iter().any(|&(i, j)| i >= n || j >= n || i == j) {
        return Err(usage("tests.wald_pairs must name two distinct assets by 0-based index"));
    }
    let _ = writeln!(report, "\nc) Equal correlations across regime matrices");
    for k in [ModelKind::CccPe, ModelKind::StccTue, ModelKind::StccTupe] {
        if has(k) {
            let mut t = wald_equal_correlations(fit_of(k), &wald_pairs)?;
            t.name = format!("Wald {k}");
            let _ = writeln!(report, "{}", test_line(&t));
            doc.stock_bond.push(t);
        }
    }

    let _ = writeln!(report, "\nd) Nested models");
    for (r, u) in &lr_pairs {
        let t = lr_test(fit_of(*r), fit_of(*u))?;
        let _ = writeln!(report, "{}", test_line(&t));
        doc.nested.push(t);
    }

    let lags: Vec<usize> = [1, 5, 10, 20].into_iter().filter(|l| *l <= cfg.tests.ljung_box_lags).collect();
    let max_lag = cfg.tests.ljung_box_lags;
    let names = data.panel.asset_names();
    let _ = writeln!(report, "\nLjung-Box on cross products of de-garched returns");
    for (i, j) in lower_pairs(n).into_iter().map(|(i, j)| (j, i)) {
        let lb = ljung_box(&cross_product(&fitted.residuals, i, j), max_lag)?;
        let pair = [names[i].clone(), names[j].clone()];
        let mut line = format!("{:<28}", format!("{}-{}", pair[0], pair[1]));
        for &l in &lags {
            let t = &lb[l - 1];
            let _ = write!(line, "  Q({l}) {}{}", sig6(t.statistic), if t.reject { "*" } else { "" });
        }
        let _ = writeln!(report, "{line}");
        doc.ljung_box.push(PairTests { pair, tests: lb });
    }
    if !lags.is_empty() {
        let crit: Vec<String> =
            lags.iter().map(|&l| format!("{}: {}", l, sig6(crate::inference::chi2_quantile(0.95, l).unwrap_or(f64::NAN)))).collect();
        let _ = writeln!(report, "5% critical values by lag: {}", crit.join(", "));
    }

    write_json(&cfg.out.join("tests.json"), &doc)?;
    write_text(&cfg.out.join("test_report.txt"), &report)?;
    print!("{report}");
    let ok = fitted.fits.iter().all(|f| f.converged);
    Ok(if ok { 0 } else { 1 })
}

fn write_losses(path: &Path, runs: &[(String, Vec<NaiveDate>, Vec<f64>)]) -> Result<(), CliError> {
    let mut w = csv::Writer::from_writer(create(path)?);
    w.write_record(["model", "tau", "date", "loss"]).map_err(crate::Error::from)?;
    for (model, dates, losses) in runs {
        for (tau, (d, l)) in dates.iter().zip(losses).enumerate() {
            w.write_record([model.clone(), (tau + 1).to_string(), d.to_string(), l.to_string()])
                .map_err(crate::Error::from)?;
        }
    }
    w.flush()?;
    Ok(())
}

fn write_wide_path(path: &Path, dates: &[NaiveDate], names: &[String], cp: &CorrelationPath) -> Result<(), CliError> {
    let n = names.len();
    let pairs: Vec<(usize, usize)> = lower_pairs(n).into_iter().map(|(i, j)| (j, i)).collect();
    let mut w = csv::Writer::from_writer(create(path)?);
    let mut header = vec!["date".to_string()];
    header.extend(pairs.iter().map(|&(i, j)| format!("{}-{}", names[i], names[j])));
    w.write_record(&header).map_err(crate::Error::from)?;
    for (d, m) in dates.iter().zip(&cp.matrices) {
        let mut rec = vec![d.to_string()];
        rec.extend(pairs.iter().map(|&(i, j)| m[(i, j)].to_string()));
        w.write_record(&rec).map_err(crate::Error::from)?;
    }
    w.flush()?;
    Ok(())
}

fn write_plot_data(cfg: &RunConfig, data: &Dataset, fitted: &Fitted) -> Result<(), CliError> {
    let dir = cfg.out.join("plots");
    let names = data.panel.asset_names();
    let n = names.len();
    let window = cfg.plots.rolling_window.clamp(2, data.panel.len());
    let pairs: Vec<(usize, usize)> = lower_pairs(n).into_iter().map(|(i, j)| (j, i)).collect();
    let rolling: Vec<_> =
        pairs.iter().map(|&p| rolling_correlation(&data.panel, p, window)).collect::<Result<_, _>>()?;
    let mut w = csv::Writer::from_writer(create(&dir.join("rolling_correlation.csv"))?);
    let mut header = vec!["date".to_string()];
    header.extend(pairs.iter().map(|&(i, j)| format!("{}-{}", names[i], names[j])));
    if data.exog.is_some() {
        header.push("exogenous".into());
    }
    w.write_record(&header).map_err(crate::Error::from)?;
    for k in 0..rolling[0].len() {
        let t = k + window - 1;
        let mut rec = vec![rolling[0][k].0.to_string()];
        rec.extend(rolling.iter().map(|r| r[k].1.map(|v| v.to_string()).unwrap_or_default()));
        if let Some(x) = &data.exog {
            rec.push(x.values[t].to_string());
        }
        w.write_record(&rec).map_err(crate::Error::from)?;
    }
    w.flush()?;

    let mut written = std::collections::BTreeSet::new();
    for fit in &fitted.fits {
        if !written.insert(fit.kind()) {
            continue;
        }
        write_wide_path(&dir.join(format!("path_{}.csv", slug(fit.kind()))), data.panel.dates(), names, &fit.correlation_path)?;
        let transitions: Vec<TransitionParams> = match &fit.params {
            CorrParams::StccTue { transition, .. } => vec![*transition],
            CorrParams::StccTupe { transition1, transition2, .. } => vec![*transition1, *transition2],
            _ => continue,
        };
        let x = &data.exog.as_ref().expect("checked").values;
        let lo = x.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = x.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let m = cfg.plots.grid_points.max(2);
        let mut w = csv::Writer::from_writer(create(&dir.join(format!("transition_{}.csv", slug(fit.kind()))))?);
        let mut header = vec!["x".to_string()];
        header.extend((1..=transitions.len()).map(|d| format!("G{d}")));
        w.write_record(&header).map_err(crate::Error::from)?;
        for g in 0..m {
            let xv = lo + (hi - lo) * g as f64 / (m - 1) as f64;
            let mut rec = vec![xv.to_string()];
            rec.extend(transitions.iter().map(|tp| logistic_transition(xv, tp).to_string()));
            w.write_record(&rec).map_err(crate::Error::from)?;
        }
        w.flush()?;
    }
    Ok(())
}

pub fn forecast(cfg: &RunConfig) -> CmdResult {
    let kinds = cfg.model_kinds().map_err(usage)?;
    let statistics = cfg.mcs.statistics().map_err(usage)?;
    let scheme = cfg.rolling.scheme().map_err(usage)?;
    let data = load_data(cfg)?;
    check_inputs(&kinds, &data)?;
    if data.panel.len() < scheme.required_len() {
        return Err(usage(format!(
            "rolling scheme ({}, {}, {}) needs {} observations, data have {}",
            scheme.window_length,
            scheme.block_length,
            scheme.n_blocks,
            scheme.required_len(),
            data.panel.len()
        )));
    }
    let opts = ForecastOptions { garch: garch_options(cfg), estimate: estimate_options(cfg) };
    let runs = rolling_forecast_many(&kinds, &data.panel, data.exog.as_ref(), data.regimes.as_ref(), &scheme, &opts)?;

    let mut qlike = Vec::new();
    let mut gmv = Vec::new();
    for run in &runs {
        qlike.push((run.model.clone(), run.dates.clone(), qlike_series(&run.forecasts, &run.realized)?));
        gmv.push((run.model.clone(), run.dates.clone(), gmv_series(&run.forecasts)?));
    }
    write_losses(&cfg.out.join("losses_qlike.csv"), &qlike)?;
    write_losses(&cfg.out.join("losses_gmv.csv"), &gmv)?;

    let mut report = data_summary(&data);
    let _ = writeln!(
        report,
        "Rolling scheme: window {}, block {}, {} blocks, {} forecasts per model",
        scheme.window_length,
        scheme.block_length,
        scheme.n_blocks,
        scheme.n_forecasts()
    );
    let _ = writeln!(report, "\n{:<16}{:>14}{:>14}  blocks converged", "model", "QLike", "GMV");
    for (k, run) in runs.iter().enumerate() {
        let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
        let conv = run.block_converged.iter().filter(|c| **c).count();
        let _ = writeln!(
            report,
            "{:<16}{:>14}{:>14}  {}/{}",
            run.model,
            sig6(mean(&qlike[k].2)),
            sig6(mean(&gmv[k].2)),
            conv,
            run.block_converged.len()
        );
    }

    let names: Vec<String> = runs.iter().map(|r| r.model.clone()).collect();
    let mut mcs_doc: Vec<serde_json::Value> = Vec::new();
    for (loss_name, losses) in [("QLike", &qlike), ("GMV", &gmv)] {
        let series: Vec<Vec<f64>> = losses.iter().map(|l| l.2.clone()).collect();
        for &stat in &statistics {
            let o = McsOptions {
                statistic: stat,
                alpha: cfg.mcs.alpha,
                n_boot: cfg.mcs.n_boot,
                block_len: cfg.mcs.block_len,
                seed: cfg.mcs.seed.unwrap_or(cfg.seed),
            };
            let r: McsResult = if names.len() >= 2 {
                mcs(&names, &series, &o)?
            } else {
                continue;
            };
            report.push('\n');
            report.push_str(&mcs_block(&format!("MCS {loss_name}"), &r));
            mcs_doc.push(json!({ "loss": loss_name, "result": r }));
        }
    }
    write_json(&cfg.out.join("mcs.json"), &mcs_doc)?;

    // full-sample fits for the plot files
    let fitted = fit_models(cfg, &data, &kinds)?;
    write_plot_data(cfg, &data, &fitted)?;

    write_text(&cfg.out.join("forecast_report.txt"), &report)?;
    print!("{report}");
    Ok(0)
}

fn block_matrix(n: usize, within: f64, with_last: f64) -> DMatrix<f64> {
    DMatrix::from_fn(n, n, |i, j| {
        if i == j {
            1.0
        } else if i == n - 1 || j == n - 1 {
            with_last
        } else {
            within
        }
    })
}

fn simulation_setup(cfg: &RunConfig) -> Result<(SimulationSetup, usize), CliError> {
    let s = &cfg.simulate;
    let kind: ModelKind = s.model.parse().map_err(usage)?;
    let n = s.n_assets;
    if n < 2 {
        return Err(usage("simulate.n_assets must be at least 2"));
    }
    if s.length < 100 {
        return Err(usage("simulate.length must be at least 100"));
    }
    let mats: Vec<DMatrix<f64>> = s.correlations.iter().map(|c| block_matrix(n, c[0], c[1])).collect();
    for (k, m) in mats.iter().enumerate() {
        if !(linalg::min_eigenvalue(m) > 0.0) || m.iter().any(|v| v.abs() > 1.0) {
            return Err(usage(format!("simulate.correlations[{k}] is not a positive definite correlation matrix")));
        }
    }
    let need = match kind {
        ModelKind::Ccc => 1,
        ModelKind::CccPe | ModelKind::StccTue => 2,
        ModelKind::StccTupe => 4,
        _ => 1,
    };
    if mats.len() < need {
        return Err(usage(format!("{kind} needs {need} correlation matrices in simulate.correlations")));
    }
    let transition = |d: usize| TransitionParams::new(s.slope[d], s.location[d]).map_err(usage);
    let exog = synthetic_exogenous(s.length, s.exogenous[0], s.exogenous[1], s.exogenous[2], cfg.seed ^ 0x9e37_79b9);
    let xbar = exog.iter().sum::<f64>() / exog.len() as f64;
    let regimes = synthetic_regimes(s.length, 1, &s.switch_at);
    let (a, b, psi) = (s.a, s.b, s.psi);
    let mut rbar = None;
    let params = match kind {
        ModelKind::Ccc => CorrParams::Ccc { r: mats[0].clone() },
        ModelKind::CccPe => CorrParams::CccPe { r1: mats[0].clone(), r2: mats[1].clone() },
        ModelKind::StccTue => CorrParams::StccTue { r1: mats[0].clone(), r2: mats[1].clone(), transition: transition(0)? },
        ModelKind::StccTupe => CorrParams::StccTupe {
            r1: mats[0].clone(),
            r2: mats[1].clone(),
            r3: mats[2].clone(),
            r4: mats[3].clone(),
            transition1: transition(0)?,
            transition2: transition(1)?,
        },
        _ => {
            rbar = Some(mats[0].clone());
            let p = match kind {
                ModelKind::Dcc => DccParams::dcc(a[0], b[0]),
                ModelKind::DccTue => DccParams::tue(a[0], b[0], psi[0]),
                ModelKind::DccTupePsi => DccParams::tupe_psi(a[0], b[0], psi[0], psi[1]),
                ModelKind::DccPe => DccParams::pe(a[0], b[0], a[1], b[1]),
                _ => DccParams::tupe((a[0], b[0], psi[0]), (a[1], b[1], psi[1])),
            };
            p.validate(xbar).map_err(usage)?;
            CorrParams::Dcc(p)
        }
    };
    let g = &s.garch;
    let garch = GjrParams::new(g[0], g[1], g[2], g[3]).map_err(usage)?;
    let mut setup = SimulationSetup::new(params)
        .with_garch(vec![garch; n])
        .with_exogenous(exog)
        .with_regimes(regimes);
    setup.rbar = rbar;
    if let Some(d) = &s.start {
        setup.start = d.parse().map_err(usage)?;
    }
    Ok((setup, s.length))
}

pub fn simulate(cfg: &RunConfig) -> CmdResult {
    let (setup, len) = simulation_setup(cfg)?;
    let sim = draw(&setup, len, cfg.seed)?;
    let out = &cfg.out;
    let dates = sim.panel.dates();
    write_panel(&sim.panel, create(&out.join("returns.csv"))?, b',')?;
    if let Some(x) = &sim.exog {
        write_series(dates, &x.values, "exogenous", create(&out.join("exogenous.csv"))?, b',')?;
    }
    let mut cal = String::new();
    if let Some(r) = &sim.regimes {
        let _ = writeln!(cal, "initial_regime = {}", r.dummy[0]);
        for t in 1..r.len() {
            if r.dummy[t] != r.dummy[t - 1] {
                let _ = writeln!(cal, "\n[[switch]]\ndate = {}\nregime = {}", dates[t], r.dummy[t]);
            }
        }
    }
    write_text(&out.join("calendar.toml"), &cal)?;
    sim.path.write_long(dates, sim.panel.asset_names(), create(&out.join("true_correlations.csv"))?, b',')?;

    let mut follow = String::new();
    let _ = writeln!(follow, "models = [{}]", cfg.models.iter().map(|m| format!("{m:?}")).collect::<Vec<_>>().join(", "));
    let _ = writeln!(follow, "seed = {}", cfg.seed);
    let _ = writeln!(follow, "out = \"results\"");
    let _ = writeln!(
        follow,
        "\n[data]\nreturns = \"returns.csv\"\nexogenous = \"exogenous.csv\"\ncalendar = \"calendar.toml\""
    );
    let _ = writeln!(
        follow,
        "\n[rolling]\nwindow = {}\nblock = {}\nblocks = {}",
        cfg.rolling.window, cfg.rolling.block, cfg.rolling.blocks
    );
    write_text(&out.join("config.toml"), &follow)?;

    let report = format!(
        "Simulated {} observations of {} assets from {} (seed {}) into {}\n",
        len,
        sim.panel.n_assets(),
        setup.params.kind(),
        cfg.seed,
        out.display()
    );
    print!("{report}");
    let _ = std::io::stdout().flush();
    Ok(0)
}
