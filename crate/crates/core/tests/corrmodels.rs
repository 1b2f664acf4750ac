mod common;

use approx::assert_abs_diff_eq;
use nalgebra::DMatrix;

use condcorr::corrmodels::{
    build_path, correlation_loglik, correlation_targeting, dcc_recursion, estimate, estimate_all, logistic_transition,
    simulate, synthetic_exogenous, synthetic_regimes, triangular_to_correlation, CorrInputs, CorrParams, DccParams,
    EstimateOptions, ModelKind, ModelSpec, SimulationSetup, TargetingOptions, TransitionParams,
};
use condcorr::data::{business_days, ExogenousSeries, RegimeCalendar};

fn dates(t: usize) -> Vec<chrono::NaiveDate> {
    business_days(chrono::NaiveDate::from_ymd_opt(2010, 1, 4).unwrap(), t)
}

fn exog(values: Vec<f64>) -> ExogenousSeries {
    ExogenousSeries::new(dates(values.len()), values).unwrap()
}

fn regimes(d: Vec<u8>) -> RegimeCalendar {
    RegimeCalendar::new(dates(d.len()), d).unwrap()
}

fn assert_valid_path(ms: &[DMatrix<f64>]) {
    for m in ms {
        let n = m.nrows();
        for i in 0..n {
            assert!((m[(i, i)] - 1.0).abs() <= 1e-12);
            for j in 0..n {
                assert!((m[(i, j)] - m[(j, i)]).abs() <= 1e-12);
            }
        }
        assert!(common::min_eigenvalue(m) > 0.0);
    }
}

#[test]
fn five_asset_parameter_counts() {
    let counts: Vec<usize> = ModelKind::ALL.iter().map(|k| ModelSpec::new(*k, 5).parameter_count).collect();
    assert_eq!(counts, vec![10, 20, 22, 44, 2, 3, 6, 4, 4]);
}

#[test]
fn loglik_identity_path() {
    let mut rng = common::rng(2);
    let eps = common::normal_matrix(&mut rng, 40, 3);
    let path = build_path(&CorrParams::Ccc { r: DMatrix::identity(3, 3) }, &CorrInputs::new(&eps, None, None).unwrap(), None)
        .unwrap();
    let ll = correlation_loglik(&path, &eps).unwrap();
    let expected = -(40.0 * 3.0 / 2.0) * (2.0 * std::f64::consts::PI).ln() - 0.5 * eps.iter().map(|e| e * e).sum::<f64>();
    assert_abs_diff_eq!(ll, expected, epsilon = 1e-9);
}

#[test]
fn loglik_scalar_case() {
    let mut rng = common::rng(4);
    let eps = common::normal_matrix(&mut rng, 25, 1);
    let path = condcorr::corrmodels::CorrelationPath { model: ModelKind::Ccc, matrices: vec![DMatrix::identity(1, 1); 25] };
    let ll = correlation_loglik(&path, &eps).unwrap();
    let expected = -12.5 * (2.0 * std::f64::consts::PI).ln() - 0.5 * eps.iter().map(|e| e * e).sum::<f64>();
    assert_abs_diff_eq!(ll, expected, epsilon = 1e-10);
}

#[test]
fn loglik_matches_naive_loop() {
    let mut rng = common::rng(6);
    let eps = common::normal_matrix(&mut rng, 50, 3);
    let ms: Vec<DMatrix<f64>> = (0..50).map(|_| common::random_correlation(&mut rng, 3)).collect();
    let path = condcorr::corrmodels::CorrelationPath { model: ModelKind::Ccc, matrices: ms.clone() };
    assert_abs_diff_eq!(correlation_loglik(&path, &eps).unwrap(), common::naive_loglik(&ms, &eps), epsilon = 1e-8);
}

#[test]
fn loglik_reports_singular_time() {
    let eps = DMatrix::from_element(3, 2, 0.5);
    let mut ms = vec![DMatrix::identity(2, 2); 3];
    ms[1] = DMatrix::from_element(2, 2, 1.0);
    let path = condcorr::corrmodels::CorrelationPath { model: ModelKind::Ccc, matrices: ms };
    let err = correlation_loglik(&path, &eps).unwrap_err();
    assert!(err.to_string().contains("t=1"), "{err}");
}

#[test]
fn triangular_random_draw_is_pp_transpose() {
    let mut rng = common::rng(8);
    let n = 5;
    // rows scaled into the unit ball
    let mut free = Vec::new();
    let mut p = DMatrix::zeros(n, n);
    p[(0, 0)] = 1.0;
    for i in 1..n {
        let raw: Vec<f64> = (0..i).map(|_| common::normal(&mut rng)).collect();
        let norm = raw.iter().map(|v| v * v).sum::<f64>().sqrt();
        let scale = 0.95 / norm.max(1.0);
        let mut ss = 0.0;
        for (j, v) in raw.iter().enumerate() {
            p[(i, j)] = v * scale;
            ss += (v * scale).powi(2);
            free.push(v * scale);
        }
        p[(i, i)] = (1.0 - ss).sqrt();
    }
    let r = triangular_to_correlation(&free, n).unwrap();
    let direct = &p * p.transpose();
    for i in 0..n {
        assert_eq!(r[(i, i)], 1.0);
        for j in 0..n {
            assert_abs_diff_eq!(r[(i, j)], direct[(i, j)], epsilon = 1e-12);
        }
    }
    assert!(common::min_eigenvalue(&r) >= -1e-12);
}

#[test]
fn logistic_examples() {
    let tr = TransitionParams::new(6.7608, -0.0559).unwrap();
    assert_eq!(logistic_transition(-0.0559, &tr), 0.5);
    assert_abs_diff_eq!(logistic_transition(0.0, &tr), 1.0 / (1.0 + (-6.7608f64 * 0.0559).exp()), epsilon = 1e-15);
    let steep = TransitionParams::new(1e6, 0.3).unwrap();
    assert!((logistic_transition(0.31, &steep) - 1.0).abs() < 1e-9);
    assert!(TransitionParams::new(0.0, 1.0).is_err());
}

#[test]
fn ccc_pe_with_equal_matrices_is_ccc() {
    let mut rng = common::rng(10);
    let r = common::random_correlation(&mut rng, 3);
    let eps = common::normal_matrix(&mut rng, 30, 3);
    let d = regimes((0..30).map(|t| (t % 3 == 0) as u8).collect());
    let inputs = CorrInputs::new(&eps, None, Some(&d)).unwrap();
    let a = build_path(&CorrParams::Ccc { r: r.clone() }, &inputs, None).unwrap();
    let b = build_path(&CorrParams::CccPe { r1: r.clone(), r2: r.clone() }, &inputs, None).unwrap();
    assert_eq!(a.matrices, b.matrices);
}

#[test]
fn stcc_midpoint_when_x_at_location() {
    let mut rng = common::rng(12);
    let r1 = common::random_correlation(&mut rng, 4);
    let r2 = common::random_correlation(&mut rng, 4);
    let eps = common::normal_matrix(&mut rng, 20, 4);
    let x = exog(vec![1.7; 20]);
    let inputs = CorrInputs::new(&eps, Some(&x), None).unwrap();
    let params = CorrParams::StccTue { r1: r1.clone(), r2: r2.clone(), transition: TransitionParams::new(3.0, 1.7).unwrap() };
    let path = build_path(&params, &inputs, None).unwrap();
    let mid = (&r1 + &r2) * 0.5;
    for m in &path.matrices {
        assert!((m - &mid).amax() < 1e-12);
    }
    assert!(common::min_eigenvalue(&mid) > 0.0);
}

#[test]
fn stcc_tupe_in_regime_one_is_stcc_tue() {
    let mut rng = common::rng(14);
    let rs: Vec<DMatrix<f64>> = (0..4).map(|_| common::random_correlation(&mut rng, 3)).collect();
    let eps = common::normal_matrix(&mut rng, 60, 3);
    let x = exog(synthetic_exogenous(60, 1.0, 0.9, 0.3, 1));
    let d = regimes(vec![1; 60]);
    let t1 = TransitionParams::new(4.0, 1.1).unwrap();
    let t2 = TransitionParams::new(9.0, 0.7).unwrap();
    let tupe = CorrParams::StccTupe {
        r1: rs[0].clone(),
        r2: rs[1].clone(),
        r3: rs[2].clone(),
        r4: rs[3].clone(),
        transition1: t1,
        transition2: t2,
    };
    let tue = CorrParams::StccTue { r1: rs[0].clone(), r2: rs[1].clone(), transition: t1 };
    let a = build_path(&tupe, &CorrInputs::new(&eps, Some(&x), Some(&d)).unwrap(), None).unwrap();
    let b = build_path(&tue, &CorrInputs::new(&eps, Some(&x), None).unwrap(), None).unwrap();
    for (p, q) in a.matrices.iter().zip(&b.matrices) {
        assert!((p - q).amax() < 1e-12);
    }
}

#[test]
fn stcc_requires_exogenous() {
    let eps = DMatrix::from_element(10, 2, 0.1);
    let inputs = CorrInputs::new(&eps, None, None).unwrap();
    let params = CorrParams::StccTue {
        r1: DMatrix::identity(2, 2),
        r2: DMatrix::identity(2, 2),
        transition: TransitionParams::new(1.0, 0.0).unwrap(),
    };
    assert!(build_path(&params, &inputs, None).is_err());
}

#[test]
fn dcc_collapses_to_target() {
    let mut rng = common::rng(16);
    let rbar = common::random_correlation(&mut rng, 3);
    let eps = common::normal_matrix(&mut rng, 40, 3);
    let inputs = CorrInputs::new(&eps, None, None).unwrap();
    for p in [DccParams::dcc(0.0, 0.0), DccParams::dcc(0.0, 0.7)] {
        let (qs, path) = dcc_recursion(&p, &inputs, &rbar).unwrap();
        for (q, r) in qs.iter().zip(&path.matrices) {
            assert!((q - &rbar).amax() < 1e-12);
            assert!((r - &rbar).amax() < 1e-12);
        }
    }
}

#[test]
fn dcc_matches_naive_loop_at_table_parameters() {
    let mut rng = common::rng(18);
    let rbar = common::random_correlation(&mut rng, 5);
    let setup = SimulationSetup::new(CorrParams::Dcc(DccParams::dcc(0.1908, 0.7907))).with_rbar(rbar.clone());
    let sim = simulate(&setup, 300, 3).unwrap();
    let eps = sim.innovations.clone();
    let p = DccParams::dcc(0.1908, 0.7907);
    let (qs, path) = dcc_recursion(&p, &CorrInputs::new(&eps, None, None).unwrap(), &rbar).unwrap();
    let (nq, _) = common::naive_dcc(&p, &eps, None, None, 0.0, &rbar);
    for (a, b) in qs.iter().zip(&nq) {
        assert!((a - b).amax() < 1e-10);
    }
    assert_valid_path(&path.matrices);
}

#[test]
fn dcc_regime_one_equals_plain_recursion() {
    let mut rng = common::rng(20);
    let rbar = common::random_correlation(&mut rng, 4);
    let eps = common::normal_matrix(&mut rng, 80, 4);
    let xv = synthetic_exogenous(80, 1.0, 0.9, 0.2, 5);
    let x = exog(xv);
    let d = regimes(vec![1; 80]);
    let tupe = DccParams::tupe((0.05, 0.85, 0.03), (0.2, 0.5, 0.1));
    let tue = DccParams::tue(0.05, 0.85, 0.03);
    let (qa, _) = dcc_recursion(&tupe, &CorrInputs::new(&eps, Some(&x), Some(&d)).unwrap(), &rbar).unwrap();
    let (qb, _) = dcc_recursion(&tue, &CorrInputs::new(&eps, Some(&x), None).unwrap(), &rbar).unwrap();
    for (a, b) in qa.iter().zip(&qb) {
        assert!((a - b).amax() <= 1e-12);
    }
}

#[test]
fn dcc_with_exogenous_and_regimes_matches_naive() {
    let mut rng = common::rng(22);
    let rbar = common::random_correlation(&mut rng, 3);
    let eps = common::normal_matrix(&mut rng, 120, 3);
    let xv = synthetic_exogenous(120, 1.0, 0.95, 0.3, 9);
    let dv = synthetic_regimes(120, 1, &[30, 75]);
    let x = exog(xv.clone());
    let d = regimes(dv.clone());
    let p = DccParams::tupe((0.04, 0.9, 0.02), (0.1, 0.7, 0.08));
    let (qs, _) = dcc_recursion(&p, &CorrInputs::new(&eps, Some(&x), Some(&d)).unwrap(), &rbar).unwrap();
    let (nq, _) = common::naive_dcc(&p, &eps, Some(&xv), Some(&dv), x.sample_mean, &rbar);
    for (a, b) in qs.iter().zip(&nq) {
        assert!((a - b).amax() < 1e-10);
    }
}

#[test]
fn dcc_negative_intercept_rejected() {
    assert!(DccParams::tue(0.1, 0.85, 0.1).validate(1.0).is_err());
    assert!(DccParams::tue(0.1, 0.85, 0.01).validate(1.0).is_ok());
}

#[test]
fn targeting_without_dynamics_is_moment_correlation() {
    let mut rng = common::rng(24);
    let eps = common::normal_matrix(&mut rng, 200, 3);
    let t = correlation_targeting(&DccParams::dcc(0.0, 0.0), &CorrInputs::new(&eps, None, None).unwrap(), TargetingOptions::default())
        .unwrap();
    assert_eq!(t.iterations, 1);
    let m = eps.transpose() * &eps;
    for i in 0..3 {
        for j in 0..3 {
            assert_abs_diff_eq!(t.rbar[(i, j)], m[(i, j)] / (m[(i, i)] * m[(j, j)]).sqrt(), epsilon = 1e-12);
        }
    }
}

#[test]
fn targeting_recovers_simulated_target() {
    let rbar = DMatrix::from_row_slice(3, 3, &[1.0, 0.6, -0.3, 0.6, 1.0, 0.2, -0.3, 0.2, 1.0]);
    let p = DccParams::dcc(0.05, 0.9);
    let sim = simulate(&SimulationSetup::new(CorrParams::Dcc(p)).with_rbar(rbar.clone()), 20_000, 31).unwrap();
    let inputs = CorrInputs::new(&sim.innovations, None, None).unwrap();
    let t = correlation_targeting(&p, &inputs, TargetingOptions::default()).unwrap();
    assert!(t.converged);
    assert!(t.last_change < 1e-6);
    assert!((&t.rbar - &rbar).amax() < 0.03, "{}", t.rbar);
}

#[test]
fn ccc_estimate_recovers_rho() {
    let r = common::constant_correlation(2, 0.5);
    let sim = simulate(&SimulationSetup::new(CorrParams::Ccc { r }), 5000, 41).unwrap();
    let inputs = CorrInputs::new(&sim.innovations, None, None).unwrap();
    let fit = estimate(ModelKind::Ccc, &inputs, &EstimateOptions::default()).unwrap();
    assert!(fit.converged);
    let rho = fit.values[0];
    let e = &sim.innovations;
    let sample = common::sample_correlation(&e.column(0).iter().copied().collect::<Vec<_>>(), &e.column(1).iter().copied().collect::<Vec<_>>());
    assert!((rho - 0.5).abs() < 0.03 && (rho - sample).abs() < 0.02, "{rho} {sample}");
}

#[test]
fn dcc_tue_psi_zero_within_two_se() {
    let rbar = common::constant_correlation(3, 0.4);
    let xv = synthetic_exogenous(3000, 1.0, 0.97, 0.2, 7);
    let setup = SimulationSetup::new(CorrParams::Dcc(DccParams::dcc(0.05, 0.9))).with_rbar(rbar).with_exogenous(xv.clone());
    let sim = simulate(&setup, 3000, 43).unwrap();
    let x = exog(xv);
    let inputs = CorrInputs::new(&sim.innovations, Some(&x), None).unwrap();
    let fit = estimate(ModelKind::DccTue, &inputs, &EstimateOptions::default()).unwrap();
    let psi = fit.value("psi_1").unwrap();
    let se = fit.se("psi_1").unwrap();
    assert!(psi.abs() <= 2.0 * se, "psi {psi} se {se}");
    let dcc = estimate(ModelKind::Dcc, &inputs, &EstimateOptions::default()).unwrap();
    assert!(fit.loglik >= dcc.loglik - 1e-6);
}

#[test]
fn nested_fits_are_monotone() {
    let n = 3;
    let t = 1200;
    let rbar = common::constant_correlation(n, 0.3);
    let xv = synthetic_exogenous(t, 1.0, 0.97, 0.2, 2);
    let dv = synthetic_regimes(t, 0, &[500]);
    let setup = SimulationSetup::new(CorrParams::Dcc(DccParams::tupe((0.04, 0.9, 0.02), (0.08, 0.8, 0.05))))
        .with_rbar(rbar)
        .with_exogenous(xv.clone())
        .with_regimes(dv.clone());
    let sim = simulate(&setup, t, 5).unwrap();
    let (x, d) = (exog(xv), regimes(dv));
    let inputs = CorrInputs::new(&sim.innovations, Some(&x), Some(&d)).unwrap();
    let fits = estimate_all(&ModelKind::ALL, &inputs, &EstimateOptions::default()).unwrap();
    let ll = |k: ModelKind| fits.iter().find(|f| f.kind() == k).unwrap().loglik;
    for (small, large) in ModelKind::NESTED_COMPARISONS {
        assert!(ll(large) >= ll(small) - 1e-6, "{small} {} vs {large} {}", ll(small), ll(large));
    }
    for f in &fits {
        assert_valid_path(&f.correlation_path.matrices);
        assert!(f.loglik.is_finite());
        assert!(f.robust_se().map_or(true, |s| s.iter().all(|v| *v >= 0.0)));
    }
}

#[test]
fn simulation_is_reproducible() {
    let r = common::constant_correlation(3, 0.2);
    let setup = SimulationSetup::new(CorrParams::Ccc { r });
    let a = simulate(&setup, 200, 99).unwrap();
    let b = simulate(&setup, 200, 99).unwrap();
    assert_eq!(a.panel, b.panel);
    let c = simulate(&setup, 200, 100).unwrap();
    assert_ne!(a.panel, c.panel);
}

#[test]
fn uncorrelated_simulation_within_clt_band() {
    let t = 4000;
    let sim = simulate(&SimulationSetup::new(CorrParams::Ccc { r: DMatrix::identity(2, 2) }), t, 7).unwrap();
    let r = sim.panel.returns();
    let rho = common::sample_correlation(&r.column(0).iter().copied().collect::<Vec<_>>(), &r.column(1).iter().copied().collect::<Vec<_>>());
    assert!(rho.abs() < 3.0 / (t as f64).sqrt());
}

#[test]
fn simulated_paths_are_positive_definite() {
    let rbar = common::constant_correlation(4, 0.5);
    let xv = synthetic_exogenous(500, 1.0, 0.95, 0.3, 1);
    let dv = synthetic_regimes(500, 1, &[200]);
    let setup = SimulationSetup::new(CorrParams::Dcc(DccParams::tupe((0.1, 0.85, 0.02), (0.2, 0.6, 0.1))))
        .with_rbar(rbar)
        .with_exogenous(xv)
        .with_regimes(dv);
    let sim = simulate(&setup, 500, 3).unwrap();
    assert_valid_path(&sim.path.matrices);
}
