mod common;

use chrono::NaiveDate;
use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;

use condcorr::corrmodels::{
    build_path, dcc_recursion, logistic_transition, simulate, synthetic_exogenous, CorrInputs, CorrParams, DccParams,
    ModelKind, SimulationSetup, TransitionParams,
};
use condcorr::data::{
    align, business_days, rolling_correlation, subsample_correlations, CalendarSpec, ExogenousSeries, RawSeries,
    RegimeCalendar, RegimeSwitch, ReturnPanel,
};
use condcorr::forecast::{gmv_loss, gmv_series, qlike_loss, ForecastRun};
use condcorr::garch::{gjr_variance_path, GjrParams};
use condcorr::inference::{chi2_quantile, ljung_box, lr_test_from_logliks};

fn start() -> NaiveDate {
    NaiveDate::from_ymd_opt(2018, 1, 1).unwrap()
}

fn close(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-12 * a.abs().max(b.abs()).max(1.0)
}

/// Residuals, an exogenous series and a two-regime calendar of length `t`.
fn inputs(n: usize, t: usize, seed: u64) -> (DMatrix<f64>, ExogenousSeries, RegimeCalendar) {
    let mut rng = common::rng(seed);
    let eps = common::normal_matrix(&mut rng, t, n);
    let dates = business_days(start(), t);
    let x = ExogenousSeries::new(dates.clone(), synthetic_exogenous(t, 1.0, 0.9, 0.3, seed)).unwrap();
    let d = RegimeCalendar::new(dates, (0..t).map(|s| u8::from(s < t / 2)).collect()).unwrap();
    (eps, x, d)
}

fn unconstrained(kind: ModelKind, n: usize, seed: u64) -> Vec<f64> {
    let mut rng = common::rng(seed);
    let k = CorrParams::names(kind, n).len();
    (0..k).map(|_| 1.5 * common::normal(&mut rng)).collect()
}

fn panel(n: usize, t: usize, seed: u64) -> ReturnPanel {
    let mut rng = common::rng(seed);
    let names = (0..n).map(|i| format!("a{i}")).collect();
    ReturnPanel::new(business_days(start(), t), common::normal_matrix(&mut rng, t, n), names).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 64, ..ProptestConfig::default() })]

    #[test]
    fn every_correlation_matrix_is_valid(kind_idx in 0usize..9, n in 2usize..6, t in 5usize..80, seed in any::<u64>()) {
        let kind = ModelKind::ALL[kind_idx];
        let (eps, x, d) = inputs(n, t, seed);
        let inp = CorrInputs::new(&eps, Some(&x), Some(&d)).unwrap();
        let params = CorrParams::from_unconstrained(kind, n, &unconstrained(kind, n, seed ^ 1), x.sample_mean);
        let rbar = common::random_correlation(&mut common::rng(seed ^ 2), n);
        let path = build_path(&params, &inp, Some(&rbar)).unwrap();
        prop_assert_eq!(path.matrices.len(), t);
        for r in &path.matrices {
            for i in 0..n {
                prop_assert!((r[(i, i)] - 1.0).abs() <= 1e-12);
                for j in 0..i {
                    prop_assert!((r[(i, j)] - r[(j, i)]).abs() <= 1e-12);
                }
            }
            prop_assert!(common::min_eigenvalue(r) > 0.0);
        }
    }

    #[test]
    fn all_first_regime_equals_plain_recursion(n in 2usize..5, t in 5usize..80, seed in any::<u64>(),
        a1 in 0.0f64..0.15, b1 in 0.3f64..0.8, a2 in 0.0f64..0.15, b2 in 0.3f64..0.8) {
        let (eps, _, _) = inputs(n, t, seed);
        let ones = RegimeCalendar::constant(business_days(start(), t), 1).unwrap();
        let rbar = common::random_correlation(&mut common::rng(seed ^ 3), n);
        let with = CorrInputs::new(&eps, None, Some(&ones)).unwrap();
        let without = CorrInputs::new(&eps, None, None).unwrap();
        let (_, p1) = dcc_recursion(&DccParams::pe(a1, b1, a2, b2), &with, &rbar).unwrap();
        let (_, p2) = dcc_recursion(&DccParams::dcc(a1, b1), &without, &rbar).unwrap();
        for (r1, r2) in p1.matrices.iter().zip(&p2.matrices) {
            prop_assert!((r1 - r2).amax() <= 1e-12);
        }
    }

    #[test]
    fn logistic_is_monotone(slope in 0.01f64..500.0, loc in -3.0f64..3.0, x in -3.0f64..3.0, dx in 1e-6f64..1.0) {
        let g = TransitionParams::new(slope, loc).unwrap();
        let (lo, hi) = (logistic_transition(x, &g), logistic_transition(x + dx, &g));
        // strict where the logistic has not saturated in double precision
        prop_assert!(hi >= lo);
        if lo > 1e-12 && hi < 1.0 - 1e-12 {
            prop_assert!(hi > lo);
        }
    }

    #[test]
    fn garch_transform_round_trips(u in proptest::collection::vec(-4.0f64..4.0, 4)) {
        let p = GjrParams::from_unconstrained(&u);
        prop_assert!(p.validate().is_ok());
        let q = GjrParams::from_unconstrained(&p.to_unconstrained());
        for (a, b) in p.to_vec().iter().zip(q.to_vec()) {
            prop_assert!(close(*a, b), "{:?} vs {:?}", p, q);
        }
    }

    #[test]
    fn correlation_transform_round_trips(kind_idx in 0usize..9, n in 2usize..6, seed in any::<u64>(), xbar in 0.5f64..3.0) {
        let kind = ModelKind::ALL[kind_idx];
        let p = CorrParams::from_unconstrained(kind, n, &unconstrained(kind, n, seed), xbar);
        let q = CorrParams::from_unconstrained(kind, n, &p.to_unconstrained(xbar).unwrap(), xbar);
        for (a, b) in p.to_natural().iter().zip(q.to_natural()) {
            prop_assert!(close(*a, b), "{} vs {}", a, b);
        }
    }

    #[test]
    fn garch_path_positive(u in proptest::collection::vec(-4.0f64..4.0, 4), h0 in 1e-3f64..10.0,
        r in proptest::collection::vec(-20.0f64..20.0, 1..200)) {
        let p = GjrParams::from_unconstrained(&u);
        let h = gjr_variance_path(&p, &r, h0).unwrap();
        prop_assert!(h.iter().all(|v| *v > 0.0));
    }

    #[test]
    fn losses_ignore_order(n in 2usize..5, t in 2usize..40, seed in any::<u64>()) {
        let mut rng = common::rng(seed);
        let run = ForecastRun {
            model: "m".into(),
            dates: business_days(start(), t),
            forecasts: (0..t).map(|_| common::random_spd(&mut rng, n)).collect(),
            realized: (0..t).map(|_| DVector::from_fn(n, |_, _| common::normal(&mut rng))).collect(),
            block_converged: vec![true],
        };
        let mut perm: Vec<usize> = (0..t).collect();
        for k in (1..t).rev() {
            perm.swap(k, (seed as usize).wrapping_mul(k + 7) % (k + 1));
        }
        let shuffled = ForecastRun {
            forecasts: perm.iter().map(|&k| run.forecasts[k].clone()).collect(),
            realized: perm.iter().map(|&k| run.realized[k].clone()).collect(),
            ..run.clone()
        };
        prop_assert!(close(qlike_loss(&run).unwrap(), qlike_loss(&shuffled).unwrap()));
        prop_assert!(close(gmv_loss(&run).unwrap(), gmv_loss(&shuffled).unwrap()));
    }

    #[test]
    fn test_statistics_nonnegative(seed in any::<u64>(), t in 30usize..300, l_r in -1e4f64..0.0, gain in 0.0f64..50.0, df in 1usize..20) {
        let mut rng = common::rng(seed);
        let x: Vec<f64> = (0..t).map(|_| common::normal(&mut rng)).collect();
        for res in ljung_box(&x, 10).unwrap() {
            prop_assert!(res.statistic >= 0.0);
            prop_assert_eq!(res.reject, res.statistic > res.critical_value_5pct);
        }
        let lr = lr_test_from_logliks("lr", l_r, l_r + gain, df).unwrap();
        prop_assert!(lr.statistic >= 0.0);
        prop_assert_eq!(lr.reject, lr.statistic > lr.critical_value_5pct);
    }

    #[test]
    fn chi2_quantile_increasing(p in 0.01f64..0.98, dp in 1e-4f64..0.01, df in 1usize..60) {
        let q = chi2_quantile(p, df).unwrap();
        prop_assert!(chi2_quantile(p + dp, df).unwrap() > q);
        prop_assert!(chi2_quantile(p, df + 1).unwrap() > q);
    }

    #[test]
    fn rolling_correlation_bounded(n in 2usize..4, t in 3usize..120, w in 2usize..30, seed in any::<u64>()) {
        let p = panel(n, t, seed);
        let w = w.min(t);
        for (_, v) in rolling_correlation(&p, (0, n - 1), w).unwrap() {
            if let Some(v) = v {
                prop_assert!((-1.0..=1.0).contains(&v));
            }
        }
    }

    #[test]
    fn subsample_correlation_is_valid(n in 2usize..6, t in 4usize..100, seed in any::<u64>()) {
        let p = panel(n, t, seed);
        let dates = p.dates().to_vec();
        let s = subsample_correlations(&p, None, dates[0], dates[t - 1]).unwrap();
        let c = &s.correlation;
        for i in 0..n {
            prop_assert!((c[(i, i)] - 1.0).abs() <= 1e-12);
            for j in 0..i {
                prop_assert_eq!(c[(i, j)], c[(j, i)]);
            }
        }
        prop_assert!(common::min_eigenvalue(c) >= -1e-10);
    }

    #[test]
    fn aligned_dates_identical(t in 2usize..200, seed in any::<u64>(), keep in 1usize..5, switches in proptest::collection::vec((0usize..300, any::<bool>()), 0..5)) {
        let p = panel(2, t, seed);
        // daily exogenous observations starting before the panel, with gaps
        let days: Vec<NaiveDate> = (0..(t as i64 * 2 + 10)).map(|k| start() - chrono::Duration::days(3) + chrono::Duration::days(k)).collect();
        let kept: Vec<NaiveDate> = days.iter().enumerate().filter(|(k, _)| k % keep == 0).map(|(_, d)| *d).collect();
        let raw = RawSeries { values: (0..kept.len()).map(|k| k as f64).collect(), dates: kept };
        let spec = CalendarSpec {
            initial_regime: 1,
            switches: switches.iter().map(|(k, r)| RegimeSwitch { date: start() + chrono::Duration::days(*k as i64), regime: u8::from(*r) }).collect(),
        };
        let (p2, x, d) = align(&p, &raw, &spec).unwrap();
        prop_assert_eq!(p2.dates(), p.dates());
        prop_assert_eq!(&x.dates[..], p.dates());
        prop_assert_eq!(&d.dates[..], p.dates());
    }
}

#[test]
fn true_covariance_beats_constant_correlation_on_gmv() {
    // the GMV loss is concave in H, so a constant-correlation forecast built
    // from the same variances cannot do better on average
    let n = 3;
    let t = 1000;
    let (mut truth, mut constant) = (0.0, 0.0);
    for seed in 0..20 {
        let setup = SimulationSetup::new(CorrParams::Dcc(DccParams::dcc(0.08, 0.9)))
            .with_rbar(common::constant_correlation(n, 0.4))
            .with_garch(vec![GjrParams::new(0.05, 0.05, 0.88, 0.08).unwrap(); n]);
        let sim = simulate(&setup, t, seed).unwrap();
        let h_true: Vec<DMatrix<f64>> = (0..t).map(|s| sim.covariance(s)).collect();
        let e = &sim.innovations;
        let rho = DMatrix::from_fn(n, n, |i, j| {
            common::sample_correlation(&e.column(i).iter().copied().collect::<Vec<_>>(), &e.column(j).iter().copied().collect::<Vec<_>>())
        });
        let h_const: Vec<DMatrix<f64>> = (0..t)
            .map(|s| {
                let sd: Vec<f64> = (0..n).map(|i| sim.variances[(s, i)].sqrt()).collect();
                DMatrix::from_fn(n, n, |i, j| sd[i] * rho[(i, j)] * sd[j])
            })
            .collect();
        let mean = |v: Vec<f64>| v.iter().sum::<f64>() / v.len() as f64;
        truth += mean(gmv_series(&h_true).unwrap());
        constant += mean(gmv_series(&h_const).unwrap());
    }
    assert!(truth <= constant, "true {truth} vs constant-correlation {constant}");
}
