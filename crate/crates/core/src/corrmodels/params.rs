//! Natural parameters of each specification and the maps to and from the
//! unconstrained space the optimizer works in.
//!
//! Correlation matrices are parametrised through the lower-triangular factor
//! `P` of `R = P P'` (unit-norm rows). Each row is written in hyperspherical
//! angles so that every real vector maps to a valid correlation matrix.
//! DCC coefficients for one regime are `(a, b)` on a scaled simplex, with
//! `psi * xbar` taking a logistic share of the remaining room, which keeps
//! `a + b + psi * xbar < 1` strictly.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::spec::ModelKind;
use crate::error::{Error, Result};

/// Upper bound for the transition slope.
pub const SLOPE_MAX: f64 = 500.0;
/// Bound on `a + b + psi * xbar` used by the DCC transform.
pub const DCC_SCALE: f64 = 0.9995;
/// Unconstrained value standing in for `psi = 0` in warm starts.
pub const PSI_OFF: f64 = -40.0;

fn sigmoid(u: f64) -> f64 {
    if u >= 0.0 {
        1.0 / (1.0 + (-u).exp())
    } else {
        let e = u.exp();
        e / (1.0 + e)
    }
}

fn logit(p: f64) -> f64 {
    let p = p.clamp(1e-300, 1.0 - 1e-16);
    (p / (1.0 - p)).ln()
}

/// Logistic transition `G(x) = 1 / (1 + exp(-slope (x - location)))`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TransitionParams {
    pub slope: f64,
    pub location: f64,
}

impl TransitionParams {
    pub fn new(slope: f64, location: f64) -> Result<Self> {
        if !(slope > 0.0) || !location.is_finite() {
            return Err(Error::params(format!("transition slope must be positive, got {slope}")));
        }
        Ok(TransitionParams { slope, location })
    }

    fn to_unconstrained(self) -> [f64; 2] {
        [logit(self.slope / SLOPE_MAX), self.location]
    }

    fn from_unconstrained(u: &[f64]) -> Self {
        TransitionParams { slope: SLOPE_MAX * sigmoid(u[0]), location: u[1] }
    }
}

/// Value in `(0, 1)`, increasing in `x`, equal to `0.5` at the location.
pub fn logistic_transition(x: f64, params: &TransitionParams) -> f64 {
    sigmoid(params.slope * (x - params.location))
}

/// DCC coefficients per regime; index 0 applies when `D_t = 1`, index 1 when
/// `D_t = 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DccParams {
    pub a: [f64; 2],
    pub b: [f64; 2],
    pub psi: [f64; 2],
    pub restriction: ModelKind,
}

impl DccParams {
    /// Classical DCC with common `(a, b)` and no exogenous term.
    pub fn dcc(a: f64, b: f64) -> Self {
        DccParams { a: [a, a], b: [b, b], psi: [0.0; 2], restriction: ModelKind::Dcc }
    }

    pub fn tue(a: f64, b: f64, psi: f64) -> Self {
        DccParams { a: [a, a], b: [b, b], psi: [psi, psi], restriction: ModelKind::DccTue }
    }

    pub fn tupe_psi(a: f64, b: f64, psi1: f64, psi2: f64) -> Self {
        DccParams { a: [a, a], b: [b, b], psi: [psi1, psi2], restriction: ModelKind::DccTupePsi }
    }

    pub fn pe(a1: f64, b1: f64, a2: f64, b2: f64) -> Self {
        DccParams { a: [a1, a2], b: [b1, b2], psi: [0.0; 2], restriction: ModelKind::DccPe }
    }

    pub fn tupe(r1: (f64, f64, f64), r2: (f64, f64, f64)) -> Self {
        DccParams { a: [r1.0, r2.0], b: [r1.1, r2.1], psi: [r1.2, r2.2], restriction: ModelKind::DccTupe }
    }

    /// Coefficient on the target in regime `d`: `1 - a_d - b_d - psi_d xbar`.
    pub fn intercept(&self, d: usize, xbar: f64) -> f64 {
        1.0 - self.a[d] - self.b[d] - self.psi[d] * xbar
    }

    /// Checks sign constraints, the restriction equalities and positivity
    /// of both regime intercepts.
    pub fn validate(&self, xbar: f64) -> Result<()> {
        if !self.restriction.is_dcc() {
            return Err(Error::params("DCC parameters carry a non-DCC restriction"));
        }
        for d in 0..2 {
            if !(self.a[d] >= 0.0 && self.b[d] >= 0.0 && self.psi[d] >= 0.0) {
                return Err(Error::params(format!("negative DCC coefficient: {self:?}")));
            }
            if !(self.intercept(d, xbar) > 0.0) {
                return Err(Error::params(format!("DCC intercept not positive in regime {}", d + 1)));
            }
        }
        let holds = match self.restriction {
            ModelKind::Dcc => self.a[0] == self.a[1] && self.b[0] == self.b[1] && self.psi == [0.0; 2],
            ModelKind::DccTue => self.a[0] == self.a[1] && self.b[0] == self.b[1] && self.psi[0] == self.psi[1],
            ModelKind::DccTupePsi => self.a[0] == self.a[1] && self.b[0] == self.b[1],
            ModelKind::DccPe => self.psi == [0.0; 2],
            _ => true,
        };
        if !holds {
            return Err(Error::params(format!("{} restrictions violated", self.restriction)));
        }
        Ok(())
    }
}

/// Natural parameters of any of the nine specifications.
#[derive(Debug, Clone, PartialEq)]
pub enum CorrParams {
    Ccc { r: DMatrix<f64> },
    CccPe { r1: DMatrix<f64>, r2: DMatrix<f64> },
    StccTue { r1: DMatrix<f64>, r2: DMatrix<f64>, transition: TransitionParams },
    StccTupe {
        r1: DMatrix<f64>,
        r2: DMatrix<f64>,
        r3: DMatrix<f64>,
        r4: DMatrix<f64>,
        transition1: TransitionParams,
        transition2: TransitionParams,
    },
    Dcc(DccParams),
}

fn n_lower(n: usize) -> usize {
    n * (n - 1) / 2
}

/// Lower-triangle entries `(i, j)`, `i > j`, in row-major order.
pub fn lower_pairs(n: usize) -> Vec<(usize, usize)> {
    (1..n).flat_map(|i| (0..i).map(move |j| (i, j))).collect()
}

fn lower_entries(m: &DMatrix<f64>) -> Vec<f64> {
    lower_pairs(m.nrows()).into_iter().map(|(i, j)| m[(i, j)]).collect()
}

/// Symmetric unit-diagonal matrix from its lower-triangle entries.
pub fn correlation_from_lower(v: &[f64], n: usize) -> DMatrix<f64> {
    let mut m = DMatrix::identity(n, n);
    for ((i, j), x) in lower_pairs(n).into_iter().zip(v) {
        m[(i, j)] = *x;
        m[(j, i)] = *x;
    }
    m
}

/// `R = P P'` from the free entries `p_ij` (`i > j`, row-major) of the
/// triangular factor, with `p_11 = 1` and `p_ii = (1 - sum_j p_ij^2)^(1/2)`.
pub fn triangular_to_correlation(free: &[f64], n: usize) -> Result<DMatrix<f64>> {
    if free.len() != n_lower(n) {
        return Err(Error::invalid(format!("{} free entries for n={n}", free.len())));
    }
    let mut p = DMatrix::zeros(n, n);
    p[(0, 0)] = 1.0;
    let mut k = 0;
    for i in 1..n {
        let mut ss = 0.0;
        for j in 0..i {
            p[(i, j)] = free[k];
            ss += free[k] * free[k];
            k += 1;
        }
        if !(ss < 1.0) {
            return Err(Error::params(format!("row {} of the triangular factor has squared norm {ss}", i + 1)));
        }
        p[(i, i)] = (1.0 - ss).sqrt();
    }
    Ok(unit_rows_product(&p))
}

fn unit_rows_product(p: &DMatrix<f64>) -> DMatrix<f64> {
    let n = p.nrows();
    let mut r = p * p.transpose();
    for i in 0..n {
        r[(i, i)] = 1.0;
        for j in 0..i {
            let v = 0.5 * (r[(i, j)] + r[(j, i)]);
            r[(i, j)] = v;
            r[(j, i)] = v;
        }
    }
    r
}

/// Triangular factor entries from unconstrained angle parameters.
pub fn angles_to_triangular(theta: &[f64], n: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(theta.len());
    let mut k = 0;
    for i in 1..n {
        let mut rem = 1.0;
        for _ in 0..i {
            let phi = PI * sigmoid(theta[k]);
            out.push(rem * phi.cos());
            rem *= phi.sin();
            k += 1;
        }
    }
    out
}

/// Correlation matrix for any real angle vector.
pub fn angles_to_correlation(theta: &[f64], n: usize) -> DMatrix<f64> {
    let p = angles_to_triangular(theta, n);
    let mut f = DMatrix::zeros(n, n);
    f[(0, 0)] = 1.0;
    let mut k = 0;
    for i in 1..n {
        let mut ss = 0.0;
        for j in 0..i {
            f[(i, j)] = p[k];
            ss += p[k] * p[k];
            k += 1;
        }
        f[(i, i)] = (1.0 - ss).max(0.0).sqrt();
    }
    unit_rows_product(&f)
}

/// Inverse of [`angles_to_correlation`] for a positive definite correlation
/// matrix.
pub fn correlation_to_angles(r: &DMatrix<f64>) -> Result<Vec<f64>> {
    let n = r.nrows();
    let chol = r.clone().cholesky().ok_or(Error::NotPositiveDefinite { t: 0 })?;
    let l = chol.l();
    let mut out = Vec::with_capacity(n_lower(n));
    for i in 1..n {
        let norm = (0..=i).map(|j| l[(i, j)] * l[(i, j)]).sum::<f64>().sqrt();
        let mut rem = 1.0;
        for j in 0..i {
            let c = if rem > 0.0 { (l[(i, j)] / norm / rem).clamp(-1.0, 1.0) } else { 0.0 };
            let phi = c.acos();
            out.push(logit(phi / PI));
            rem *= phi.sin();
        }
    }
    Ok(out)
}

fn dcc_pair_from_unconstrained(ua: f64, ub: f64) -> (f64, f64, f64) {
    let m = ua.max(ub).max(0.0);
    let (ea, eb, e0) = ((ua - m).exp(), (ub - m).exp(), (-m).exp());
    let den = e0 + ea + eb;
    let a = DCC_SCALE * ea / den;
    let b = DCC_SCALE * eb / den;
    (a, b, DCC_SCALE * e0 / den)
}

fn dcc_pair_to_unconstrained(a: f64, b: f64) -> (f64, f64, f64) {
    let pa = (a / DCC_SCALE).max(1e-300);
    let pb = (b / DCC_SCALE).max(1e-300);
    let slack = (1.0 - pa - pb).max(1e-300);
    ((pa / slack).ln(), (pb / slack).ln(), DCC_SCALE * slack)
}

impl CorrParams {
    pub fn kind(&self) -> ModelKind {
        match self {
            CorrParams::Ccc { .. } => ModelKind::Ccc,
            CorrParams::CccPe { .. } => ModelKind::CccPe,
            CorrParams::StccTue { .. } => ModelKind::StccTue,
            CorrParams::StccTupe { .. } => ModelKind::StccTupe,
            CorrParams::Dcc(p) => p.restriction,
        }
    }

    pub fn matrices(&self) -> Vec<&DMatrix<f64>> {
        match self {
            CorrParams::Ccc { r } => vec![r],
            CorrParams::CccPe { r1, r2 } | CorrParams::StccTue { r1, r2, .. } => vec![r1, r2],
            CorrParams::StccTupe { r1, r2, r3, r4, .. } => vec![r1, r2, r3, r4],
            CorrParams::Dcc(_) => vec![],
        }
    }

    /// Names of the natural parameters, in [`CorrParams::to_natural`] order.
    pub fn names(kind: ModelKind, n: usize) -> Vec<String> {
        let tri = |label: &str| -> Vec<String> {
            lower_pairs(n).into_iter().map(|(i, j)| format!("{label}[{},{}]", i + 1, j + 1)).collect()
        };
        let s = |v: &[&str]| v.iter().map(|x| x.to_string()).collect::<Vec<_>>();
        match kind {
            ModelKind::Ccc => tri("R"),
            ModelKind::CccPe => [tri("R1"), tri("R2")].concat(),
            ModelKind::StccTue => [tri("R1"), tri("R2"), s(&["phi", "c"])].concat(),
            ModelKind::StccTupe => {
                [tri("R1"), tri("R2"), tri("R3"), tri("R4"), s(&["phi_1", "c_1", "phi_2", "c_2"])].concat()
            }
            ModelKind::Dcc => s(&["a_1", "b_1"]),
            ModelKind::DccTue => s(&["a_1", "b_1", "psi_1"]),
            ModelKind::DccTupe => s(&["a_1", "b_1", "psi_1", "a_2", "b_2", "psi_2"]),
            ModelKind::DccTupePsi => s(&["a_1", "b_1", "psi_1", "psi_2"]),
            ModelKind::DccPe => s(&["a_1", "b_1", "a_2", "b_2"]),
        }
    }

    /// Flat vector of the freely estimated natural parameters.
    pub fn to_natural(&self) -> Vec<f64> {
        match self {
            CorrParams::Ccc { r } => lower_entries(r),
            CorrParams::CccPe { r1, r2 } => [lower_entries(r1), lower_entries(r2)].concat(),
            CorrParams::StccTue { r1, r2, transition } => {
                [lower_entries(r1), lower_entries(r2), vec![transition.slope, transition.location]].concat()
            }
            CorrParams::StccTupe { r1, r2, r3, r4, transition1: g1, transition2: g2 } => [
                lower_entries(r1),
                lower_entries(r2),
                lower_entries(r3),
                lower_entries(r4),
                vec![g1.slope, g1.location, g2.slope, g2.location],
            ]
            .concat(),
            CorrParams::Dcc(p) => match p.restriction {
                ModelKind::Dcc => vec![p.a[0], p.b[0]],
                ModelKind::DccTue => vec![p.a[0], p.b[0], p.psi[0]],
                ModelKind::DccTupe => vec![p.a[0], p.b[0], p.psi[0], p.a[1], p.b[1], p.psi[1]],
                ModelKind::DccTupePsi => vec![p.a[0], p.b[0], p.psi[0], p.psi[1]],
                _ => vec![p.a[0], p.b[0], p.a[1], p.b[1]],
            },
        }
    }

    /// Rebuilds parameters from a natural vector. Matrices are taken entry by
    /// entry and are not checked for definiteness here.
    pub fn from_natural(kind: ModelKind, n: usize, v: &[f64]) -> Result<CorrParams> {
        let m = n_lower(n);
        if v.len() != kind.parameter_count(n) {
            return Err(Error::invalid(format!("{} expects {} parameters, got {}", kind, kind.parameter_count(n), v.len())));
        }
        let mat = |k: usize| correlation_from_lower(&v[k * m..(k + 1) * m], n);
        Ok(match kind {
            ModelKind::Ccc => CorrParams::Ccc { r: mat(0) },
            ModelKind::CccPe => CorrParams::CccPe { r1: mat(0), r2: mat(1) },
            ModelKind::StccTue => CorrParams::StccTue {
                r1: mat(0),
                r2: mat(1),
                transition: TransitionParams { slope: v[2 * m], location: v[2 * m + 1] },
            },
            ModelKind::StccTupe => CorrParams::StccTupe {
                r1: mat(0),
                r2: mat(1),
                r3: mat(2),
                r4: mat(3),
                transition1: TransitionParams { slope: v[4 * m], location: v[4 * m + 1] },
                transition2: TransitionParams { slope: v[4 * m + 2], location: v[4 * m + 3] },
            },
            ModelKind::Dcc => CorrParams::Dcc(DccParams::dcc(v[0], v[1])),
            ModelKind::DccTue => CorrParams::Dcc(DccParams::tue(v[0], v[1], v[2])),
            ModelKind::DccTupe => CorrParams::Dcc(DccParams::tupe((v[0], v[1], v[2]), (v[3], v[4], v[5]))),
            ModelKind::DccTupePsi => CorrParams::Dcc(DccParams::tupe_psi(v[0], v[1], v[2], v[3])),
            ModelKind::DccPe => CorrParams::Dcc(DccParams::pe(v[0], v[1], v[2], v[3])),
        })
    }

    /// Maps an unconstrained vector to valid parameters. `xbar` is the mean
    /// of the exogenous series (ignored by models without it).
    pub fn from_unconstrained(kind: ModelKind, n: usize, u: &[f64], xbar: f64) -> CorrParams {
        let m = n_lower(n);
        let mat = |k: usize| angles_to_correlation(&u[k * m..(k + 1) * m], n);
        let psi = |room: f64, v: f64| if xbar > 0.0 { room * sigmoid(v) / xbar } else { 0.0 };
        match kind {
            ModelKind::Ccc => CorrParams::Ccc { r: mat(0) },
            ModelKind::CccPe => CorrParams::CccPe { r1: mat(0), r2: mat(1) },
            ModelKind::StccTue => CorrParams::StccTue {
                r1: mat(0),
                r2: mat(1),
                transition: TransitionParams::from_unconstrained(&u[2 * m..]),
            },
            ModelKind::StccTupe => CorrParams::StccTupe {
                r1: mat(0),
                r2: mat(1),
                r3: mat(2),
                r4: mat(3),
                transition1: TransitionParams::from_unconstrained(&u[4 * m..]),
                transition2: TransitionParams::from_unconstrained(&u[4 * m + 2..]),
            },
            ModelKind::Dcc => {
                let (a, b, _) = dcc_pair_from_unconstrained(u[0], u[1]);
                CorrParams::Dcc(DccParams::dcc(a, b))
            }
            ModelKind::DccTue => {
                let (a, b, room) = dcc_pair_from_unconstrained(u[0], u[1]);
                CorrParams::Dcc(DccParams::tue(a, b, psi(room, u[2])))
            }
            ModelKind::DccTupePsi => {
                let (a, b, room) = dcc_pair_from_unconstrained(u[0], u[1]);
                CorrParams::Dcc(DccParams::tupe_psi(a, b, psi(room, u[2]), psi(room, u[3])))
            }
            ModelKind::DccPe => {
                let (a1, b1, _) = dcc_pair_from_unconstrained(u[0], u[1]);
                let (a2, b2, _) = dcc_pair_from_unconstrained(u[2], u[3]);
                CorrParams::Dcc(DccParams::pe(a1, b1, a2, b2))
            }
            ModelKind::DccTupe => {
                let (a1, b1, room1) = dcc_pair_from_unconstrained(u[0], u[1]);
                let (a2, b2, room2) = dcc_pair_from_unconstrained(u[3], u[4]);
                CorrParams::Dcc(DccParams::tupe((a1, b1, psi(room1, u[2])), (a2, b2, psi(room2, u[5]))))
            }
        }
    }

    /// Inverse of [`CorrParams::from_unconstrained`].
    pub fn to_unconstrained(&self, xbar: f64) -> Result<Vec<f64>> {
        let ang = |m: &DMatrix<f64>| correlation_to_angles(m);
        let v = |room: f64, psi: f64| if xbar > 0.0 && psi > 0.0 { logit(psi * xbar / room) } else { PSI_OFF };
        Ok(match self {
            CorrParams::Ccc { r } => ang(r)?,
            CorrParams::CccPe { r1, r2 } => [ang(r1)?, ang(r2)?].concat(),
            CorrParams::StccTue { r1, r2, transition } => {
                [ang(r1)?, ang(r2)?, transition.to_unconstrained().to_vec()].concat()
            }
            CorrParams::StccTupe { r1, r2, r3, r4, transition1, transition2 } => [
                ang(r1)?,
                ang(r2)?,
                ang(r3)?,
                ang(r4)?,
                transition1.to_unconstrained().to_vec(),
                transition2.to_unconstrained().to_vec(),
            ]
            .concat(),
            CorrParams::Dcc(p) => {
                let (ua1, ub1, room1) = dcc_pair_to_unconstrained(p.a[0], p.b[0]);
                let (ua2, ub2, room2) = dcc_pair_to_unconstrained(p.a[1], p.b[1]);
                match p.restriction {
                    ModelKind::Dcc => vec![ua1, ub1],
                    ModelKind::DccTue => vec![ua1, ub1, v(room1, p.psi[0])],
                    ModelKind::DccTupePsi => vec![ua1, ub1, v(room1, p.psi[0]), v(room1, p.psi[1])],
                    ModelKind::DccPe => vec![ua1, ub1, ua2, ub2],
                    _ => vec![ua1, ub1, v(room1, p.psi[0]), ua2, ub2, v(room2, p.psi[1])],
                }
            }
        })
    }
}

/// Embeds an unconstrained vector of `from` into the unconstrained space of
/// the larger model `to` so that both produce the same correlation path.
/// `default_transition` fills transition parameters that `from` lacks.
pub fn embed_unconstrained(
    from: ModelKind,
    to: ModelKind,
    n: usize,
    u: &[f64],
    default_transition: [f64; 2],
) -> Option<Vec<f64>> {
    use ModelKind::*;
    let m = n_lower(n);
    let block = |k: usize| u[k * m..(k + 1) * m].to_vec();
    let t0 = default_transition.to_vec();
    Some(match (from, to) {
        (Ccc, CccPe) => [block(0), block(0)].concat(),
        (Ccc, StccTue) => [block(0), block(0), t0].concat(),
        (Ccc, StccTupe) => [block(0), block(0), block(0), block(0), t0.clone(), t0].concat(),
        (CccPe, StccTupe) => [block(0), block(0), block(1), block(1), t0.clone(), t0].concat(),
        (StccTue, StccTupe) => {
            let tr = u[2 * m..2 * m + 2].to_vec();
            [block(0), block(1), block(0), block(1), tr.clone(), tr].concat()
        }
        (Dcc, DccTue) => vec![u[0], u[1], PSI_OFF],
        (Dcc, DccPe) => vec![u[0], u[1], u[0], u[1]],
        (Dcc, DccTupePsi) => vec![u[0], u[1], PSI_OFF, PSI_OFF],
        (Dcc, DccTupe) => vec![u[0], u[1], PSI_OFF, u[0], u[1], PSI_OFF],
        (DccTue, DccTupePsi) => vec![u[0], u[1], u[2], u[2]],
        (DccTue, DccTupe) => vec![u[0], u[1], u[2], u[0], u[1], u[2]],
        (DccTupePsi, DccTupe) => vec![u[0], u[1], u[2], u[0], u[1], u[3]],
        (DccPe, DccTupe) => vec![u[0], u[1], PSI_OFF, u[2], u[3], PSI_OFF],
        _ => return None,
    })
}
