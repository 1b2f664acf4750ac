use std::fmt::Write;

use crate::corrmodels::CorrFitResult;
use crate::forecast::McsResult;
use crate::garch::GarchFit;
use crate::inference::{fit_information_criteria, TestResult};

/// Formats `x` with six significant digits, switching to scientific
/// notation for very large or very small magnitudes.
pub fn sig6(x: f64) -> String {
    if !x.is_finite() {
        return format!("{x}");
    }
    if x == 0.0 {
        return "0".into();
    }
    let mag = x.abs().log10().floor() as i32;
    if (-4..6).contains(&mag) {
        let decimals = (5 - mag).max(0) as usize;
        format!("{x:.decimals$}")
    } else {
        format!("{x:.5e}")
    }
}

pub fn garch_table(names: &[String], fits: &[GarchFit]) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "First step: GJR-GARCH(1,1)");
    let _ = writeln!(s, "{:<14}{:>14}{:>14}{:>14}{:>14}{:>16}  conv", "asset", "omega", "alpha", "beta", "gamma", "loglik");
    for (n, f) in names.iter().zip(fits) {
        let p = &f.params;
        let _ = writeln!(
            s,
            "{:<14}{:>14}{:>14}{:>14}{:>14}{:>16}  {}",
            n,
            sig6(p.omega),
            sig6(p.alpha),
            sig6(p.beta),
            sig6(p.gamma),
            sig6(f.loglik),
            f.converged
        );
        if let Some(se) = f.robust_se {
            let _ = writeln!(s, "{:<14}{:>14}{:>14}{:>14}{:>14}", "  (se)", sig6(se[0]), sig6(se[1]), sig6(se[2]), sig6(se[3]));
        }
    }
    s
}

pub fn fit_block(fit: &CorrFitResult) -> String {
    let mut s = String::new();
    let ic = fit_information_criteria(fit);
    let _ = writeln!(
        s,
        "{}  loglik {}  k {}  AIC {}  BIC {}  converged {}",
        fit.kind(),
        sig6(fit.loglik),
        fit.spec.parameter_count,
        sig6(ic.aic),
        sig6(ic.bic),
        fit.converged
    );
    for (i, name) in fit.names.iter().enumerate() {
        let se = fit.robust_se().map(|v| sig6(v[i])).unwrap_or_else(|| "n/a".into());
        let _ = writeln!(s, "  {:<16}{:>14}  ({se})", name, sig6(fit.values[i]));
    }
    s
}

pub fn test_line(t: &TestResult) -> String {
    format!(
        "{:<48}{:>16}  df {:>3}  [{}]  p {}  {}",
        t.name,
        sig6(t.statistic),
        t.df,
        sig6(t.critical_value_5pct),
        sig6(t.p_value),
        if t.reject { "reject" } else { "do not reject" }
    )
}

pub fn mcs_block(title: &str, r: &McsResult) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "{title}  ({} statistic, alpha {})", r.statistic, sig6(r.alpha));
    for e in &r.ladder {
        let _ = writeln!(
            s,
            "  {:<16}{:>14}  p {:>10}  {}",
            e.model,
            sig6(e.mean_loss),
            sig6(e.p_value),
            if e.survivor { "survivor" } else { "eliminated" }
        );
    }
    s
}
