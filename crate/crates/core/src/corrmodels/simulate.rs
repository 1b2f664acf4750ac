use chrono::NaiveDate;
use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use super::params::CorrParams;
use super::path::{CorrelationPath, Stepper};
use crate::data::{business_days, ExogenousSeries, RegimeCalendar, ReturnPanel};
use crate::error::{Error, Result};
use crate::garch::GjrParams;
use crate::linalg;

/// Data-generating process for [`simulate`].
#[derive(Debug, Clone)]
pub struct SimulationSetup {
    pub params: CorrParams,
    /// DCC target; ignored by the static and smooth-transition models.
    pub rbar: Option<DMatrix<f64>>,
    /// Per-asset variance process. Empty means unit-variance returns.
    pub garch: Vec<GjrParams>,
    /// Exogenous driver, one value per observation.
    pub exog: Option<Vec<f64>>,
    /// Regime dummy, one value per observation.
    pub regimes: Option<Vec<u8>>,
    pub start: NaiveDate,
}

impl SimulationSetup {
    pub fn new(params: CorrParams) -> Self {
        SimulationSetup {
            params,
            rbar: None,
            garch: Vec::new(),
            exog: None,
            regimes: None,
            start: NaiveDate::from_ymd_opt(2010, 1, 4).expect("valid date"),
        }
    }

    pub fn with_rbar(mut self, rbar: DMatrix<f64>) -> Self {
        self.rbar = Some(rbar);
        self
    }

    pub fn with_garch(mut self, garch: Vec<GjrParams>) -> Self {
        self.garch = garch;
        self
    }

    pub fn with_exogenous(mut self, x: Vec<f64>) -> Self {
        self.exog = Some(x);
        self
    }

    pub fn with_regimes(mut self, d: Vec<u8>) -> Self {
        self.regimes = Some(d);
        self
    }

    fn n_assets(&self) -> usize {
        match &self.params {
            CorrParams::Dcc(_) => self.rbar.as_ref().map_or(0, |r| r.nrows()),
            p => p.matrices()[0].nrows(),
        }
    }
}

/// One simulated sample with its ground truth.
#[derive(Debug, Clone)]
pub struct Simulation {
    pub panel: ReturnPanel,
    pub path: CorrelationPath,
    /// Standardized innovations `e_t ~ N(0, R_t)`.
    pub innovations: DMatrix<f64>,
    /// Conditional variances used to scale the innovations.
    pub variances: DMatrix<f64>,
    pub exog: Option<ExogenousSeries>,
    pub regimes: Option<RegimeCalendar>,
}

impl Simulation {
    /// True conditional covariance `S_t R_t S_t` at `t`.
    pub fn covariance(&self, t: usize) -> DMatrix<f64> {
        let r = &self.path.matrices[t];
        let n = r.nrows();
        DMatrix::from_fn(n, n, |i, j| r[(i, j)] * (self.variances[(t, i)] * self.variances[(t, j)]).sqrt())
    }
}

/// Draws `len` observations from the model in `setup`. The GJR variance of
/// each asset starts at its unconditional level.
pub fn simulate(setup: &SimulationSetup, len: usize, seed: u64) -> Result<Simulation> {
    let n = setup.n_assets();
    if n < 2 {
        return Err(Error::invalid("simulation needs at least 2 assets (and a target matrix for DCC)"));
    }
    if len < 2 {
        return Err(Error::invalid("simulation length must be at least 2"));
    }
    let kind = setup.params.kind();
    let exog = match (&setup.exog, kind.uses_exogenous()) {
        (Some(x), _) if x.len() != len => {
            return Err(Error::invalid(format!("exogenous series has {} values for {len} observations", x.len())))
        }
        (None, true) => return Err(Error::invalid(format!("{kind} needs an exogenous series"))),
        (x, _) => x.clone(),
    };
    if let Some(d) = &setup.regimes {
        if d.len() != len {
            return Err(Error::invalid(format!("regime dummy has {} values for {len} observations", d.len())));
        }
    }
    if !setup.garch.is_empty() && setup.garch.len() != n {
        return Err(Error::invalid(format!("{} variance processes for {n} assets", setup.garch.len())));
    }
    for g in &setup.garch {
        g.validate()?;
    }

    let xbar = exog.as_ref().map_or(0.0, |x| x.iter().sum::<f64>() / len as f64);
    let mut stepper = Stepper::new(&setup.params, n, setup.rbar.as_ref(), xbar)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let mut eps = DMatrix::zeros(len, n);
    let mut var = DMatrix::zeros(len, n);
    let mut returns = DMatrix::zeros(len, n);
    let mut matrices = Vec::with_capacity(len);
    let mut prev = vec![0.0; n];
    let mut chol = vec![0.0; n * n];
    let mut z = vec![0.0; n];
    let mut h: Vec<f64> = setup.garch.iter().map(|g| g.unconditional_variance()).collect();
    for t in 0..len {
        let x_prev = exog.as_ref().map_or(0.0, |x| x[t.saturating_sub(1)]);
        let regime = setup.regimes.as_ref().map_or(1, |d| d[t]);
        stepper.step(x_prev, regime, &prev);
        chol.copy_from_slice(stepper.r());
        if !linalg::cholesky_in_place(&mut chol, n) {
            return Err(Error::NotPositiveDefinite { t });
        }
        matrices.push(linalg::from_row_major(stepper.r(), n));
        for v in z.iter_mut() {
            *v = StandardNormal.sample(&mut rng);
        }
        for i in 0..n {
            let e: f64 = (0..=i).map(|k| chol[i * n + k] * z[k]).sum();
            eps[(t, i)] = e;
            prev[i] = e;
            let hi = if setup.garch.is_empty() { 1.0 } else { h[i] };
            var[(t, i)] = hi;
            let r = hi.sqrt() * e;
            returns[(t, i)] = r;
            if let Some(g) = setup.garch.get(i) {
                let neg = if r < 0.0 { g.gamma } else { 0.0 };
                h[i] = g.omega + (g.alpha + neg) * r * r + g.beta * hi;
            }
        }
    }

    let dates = business_days(setup.start, len);
    let names = (1..=n).map(|i| format!("asset{i}")).collect();
    let exog = match exog {
        Some(x) => Some(ExogenousSeries::new(dates.clone(), x)?),
        None => None,
    };
    let regimes = match &setup.regimes {
        Some(d) => Some(RegimeCalendar::new(dates.clone(), d.clone())?),
        None => None,
    };
    Ok(Simulation {
        panel: ReturnPanel::new(dates, returns, names)?,
        path: CorrelationPath { model: kind, matrices },
        innovations: eps,
        variances: var,
        exog,
        regimes,
    })
}

/// Positive, persistent and spiky index: `ln x_t` follows an AR(1) with
/// coefficient `persistence` around `ln level`.
pub fn synthetic_exogenous(len: usize, level: f64, persistence: f64, vol: f64, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mu = level.ln();
    let sd0 = vol / (1.0 - persistence * persistence).max(1e-12).sqrt();
    let z0: f64 = StandardNormal.sample(&mut rng);
    let mut l = mu + sd0 * z0;
    (0..len)
        .map(|_| {
            let x = l.exp();
            let z: f64 = StandardNormal.sample(&mut rng);
            l = mu + persistence * (l - mu) + vol * z;
            x
        })
        .collect()
}

/// Regime dummy equal to `first` up to each entry of `switch_at`, toggling
/// at every listed observation index.
pub fn synthetic_regimes(len: usize, first: u8, switch_at: &[usize]) -> Vec<u8> {
    let mut d = vec![first; len];
    let mut cur = first;
    let mut k = 0;
    for (t, v) in d.iter_mut().enumerate() {
        while k < switch_at.len() && switch_at[k] <= t {
            cur = 1 - cur;
            k += 1;
        }
        *v = cur;
    }
    d
}
