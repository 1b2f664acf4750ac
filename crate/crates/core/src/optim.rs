//! Unconstrained minimisation used by every likelihood fit.
//!
//! BFGS on central finite-difference gradients, followed by a Nelder-Mead
//! polish of the best point. Runs that do not meet the convergence test are
//! retried from seeded random perturbations. Every accepted step lowers the
//! objective, so the returned value never exceeds the value at the start.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

#[derive(Debug, Clone)]
pub struct OptimOptions {
    pub max_iter: usize,
    /// Infinity-norm gradient threshold for convergence.
    pub grad_tol: f64,
    /// Relative objective change treated as stalled.
    pub f_tol: f64,
    /// Relative central-difference step.
    pub fd_step: f64,
    /// Upper bound on the infinity norm of a single line-search step.
    pub max_step: f64,
    pub polish_evals: usize,
    pub restarts: usize,
    pub seed: u64,
}

impl Default for OptimOptions {
    fn default() -> Self {
        OptimOptions {
            max_iter: 400,
            grad_tol: 1e-5,
            f_tol: 1e-11,
            fd_step: 1e-5,
            max_step: 4.0,
            polish_evals: 400,
            restarts: 3,
            seed: 0x5eed,
        }
    }
}

#[derive(Debug, Clone)]
pub struct OptimResult {
    pub x: Vec<f64>,
    pub fx: f64,
    /// Objective at the supplied starting point.
    pub f_start: f64,
    pub converged: bool,
    pub iterations: usize,
    pub evaluations: usize,
}

struct Counted<F> {
    f: F,
    evals: usize,
}

impl<F: FnMut(&[f64]) -> f64> Counted<F> {
    fn call(&mut self, x: &[f64]) -> f64 {
        self.evals += 1;
        let v = (self.f)(x);
        if v.is_finite() {
            v
        } else {
            f64::INFINITY
        }
    }
}

/// Central-difference gradient with step `rel * max(|x_i|, 1)`. Falls back to
/// a one-sided difference when one side is infeasible.
pub fn fd_gradient<F: FnMut(&[f64]) -> f64>(f: &mut F, x: &[f64], fx: f64, rel: f64) -> Vec<f64> {
    let mut g = vec![0.0; x.len()];
    let mut xp = x.to_vec();
    for i in 0..x.len() {
        let h = rel * x[i].abs().max(1.0);
        xp[i] = x[i] + h;
        let fp = f(&xp);
        xp[i] = x[i] - h;
        let fm = f(&xp);
        xp[i] = x[i];
        g[i] = match (fp.is_finite(), fm.is_finite()) {
            (true, true) => (fp - fm) / (2.0 * h),
            (true, false) => (fp - fx) / h,
            (false, true) => (fx - fm) / h,
            (false, false) => 0.0,
        };
    }
    g
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn inf_norm(a: &[f64]) -> f64 {
    a.iter().fold(0.0, |m, v| m.max(v.abs()))
}

struct RunOutcome {
    x: Vec<f64>,
    fx: f64,
    converged: bool,
    iterations: usize,
}

fn bfgs<F: FnMut(&[f64]) -> f64>(f: &mut Counted<F>, x0: &[f64], f0: f64, opts: &OptimOptions) -> RunOutcome {
    let n = x0.len();
    let mut x = x0.to_vec();
    let mut fx = f0;
    if n == 0 || !fx.is_finite() {
        return RunOutcome { x, fx, converged: n == 0, iterations: 0 };
    }
    let grad = |f: &mut Counted<F>, x: &[f64], fx: f64| {
        let mut call = |z: &[f64]| f.call(z);
        fd_gradient(&mut call, x, fx, opts.fd_step)
    };
    let mut g = grad(f, &x, fx);
    let mut hinv = identity(n);
    let mut fresh = true;
    let mut stalled = 0;
    for iter in 0..opts.max_iter {
        if inf_norm(&g) < opts.grad_tol {
            return RunOutcome { x, fx, converged: true, iterations: iter };
        }
        let mut d = matvec_neg(&hinv, &g);
        let mut slope = dot(&g, &d);
        if !(slope < 0.0) {
            hinv = identity(n);
            fresh = true;
            d = g.iter().map(|v| -v).collect();
            slope = dot(&g, &d);
        }
        let dn = inf_norm(&d);
        let mut step = if dn > opts.max_step { opts.max_step / dn } else { 1.0 };
        let mut accepted = None;
        for _ in 0..50 {
            let xn: Vec<f64> = x.iter().zip(&d).map(|(a, b)| a + step * b).collect();
            let fnew = f.call(&xn);
            if fnew <= fx + 1e-4 * step * slope {
                accepted = Some((xn, fnew));
                break;
            }
            step *= 0.5;
        }
        let Some((xn, fnew)) = accepted else {
            if !fresh {
                hinv = identity(n);
                fresh = true;
                continue;
            }
            // No descent along the steepest direction: a numerical optimum.
            let small = inf_norm(&g) < 1e3 * opts.grad_tol;
            return RunOutcome { x, fx, converged: small, iterations: iter };
        };
        let gn = grad(f, &xn, fnew);
        let s: Vec<f64> = xn.iter().zip(&x).map(|(a, b)| a - b).collect();
        let y: Vec<f64> = gn.iter().zip(&g).map(|(a, b)| a - b).collect();
        let sy = dot(&s, &y);
        if sy > 1e-14 * dot(&s, &s).sqrt() * dot(&y, &y).sqrt() && sy > 0.0 {
            if fresh {
                let scale = sy / dot(&y, &y);
                for v in hinv.iter_mut() {
                    *v *= scale;
                }
            }
            bfgs_update(&mut hinv, &s, &y, sy);
            fresh = false;
        }
        let rel_change = (fx - fnew).abs() / (1.0 + fx.abs());
        x = xn;
        fx = fnew;
        g = gn;
        if rel_change < opts.f_tol {
            stalled += 1;
            if stalled >= 3 {
                return RunOutcome { x, fx, converged: true, iterations: iter + 1 };
            }
        } else {
            stalled = 0;
        }
    }
    let converged = inf_norm(&g) < opts.grad_tol;
    RunOutcome { x, fx, converged, iterations: opts.max_iter }
}

fn identity(n: usize) -> Vec<f64> {
    let mut m = vec![0.0; n * n];
    for i in 0..n {
        m[i * n + i] = 1.0;
    }
    m
}

fn matvec_neg(m: &[f64], v: &[f64]) -> Vec<f64> {
    let n = v.len();
    (0..n).map(|i| -dot(&m[i * n..(i + 1) * n], v)).collect()
}

fn bfgs_update(h: &mut [f64], s: &[f64], y: &[f64], sy: f64) {
    let n = s.len();
    let rho = 1.0 / sy;
    let hy: Vec<f64> = (0..n).map(|i| dot(&h[i * n..(i + 1) * n], y)).collect();
    let yhy = dot(y, &hy);
    for i in 0..n {
        for j in 0..n {
            h[i * n + j] += -rho * (hy[i] * s[j] + s[i] * hy[j]) + (rho * rho * yhy + rho) * s[i] * s[j];
        }
    }
}

/// Nelder-Mead around `x0`; returns the best vertex found.
pub fn nelder_mead<F: FnMut(&[f64]) -> f64>(f: &mut F, x0: &[f64], f0: f64, max_evals: usize) -> (Vec<f64>, f64) {
    let n = x0.len();
    if n == 0 || max_evals == 0 {
        return (x0.to_vec(), f0);
    }
    let mut simplex: Vec<(Vec<f64>, f64)> = Vec::with_capacity(n + 1);
    simplex.push((x0.to_vec(), f0));
    for i in 0..n {
        let mut v = x0.to_vec();
        v[i] += 0.02 * x0[i].abs().max(1.0);
        let fv = f(&v);
        simplex.push((v, if fv.is_finite() { fv } else { f64::INFINITY }));
    }
    let mut evals = n;
    let cmp = |a: &(Vec<f64>, f64), b: &(Vec<f64>, f64)| a.1.total_cmp(&b.1);
    while evals < max_evals {
        simplex.sort_by(cmp);
        let best = simplex[0].1;
        let worst = simplex[n].1;
        if (worst - best).abs() <= 1e-13 * (1.0 + best.abs()) {
            break;
        }
        let mut centroid = vec![0.0; n];
        for (v, _) in &simplex[..n] {
            for (c, x) in centroid.iter_mut().zip(v) {
                *c += x / n as f64;
            }
        }
        let point = |coef: f64, from: &[f64]| -> Vec<f64> {
            centroid.iter().zip(from).map(|(c, w)| c + coef * (w - c)).collect()
        };
        let mut eval = |v: &[f64]| {
            let r = f(v);
            if r.is_finite() {
                r
            } else {
                f64::INFINITY
            }
        };
        let xr = point(-1.0, &simplex[n].0);
        let fr = eval(&xr);
        evals += 1;
        if fr < simplex[0].1 {
            let xe = point(-2.0, &simplex[n].0);
            let fe = eval(&xe);
            evals += 1;
            simplex[n] = if fe < fr { (xe, fe) } else { (xr, fr) };
        } else if fr < simplex[n - 1].1 {
            simplex[n] = (xr, fr);
        } else {
            let outside = fr < simplex[n].1;
            let xc = if outside { point(-0.5, &simplex[n].0) } else { point(0.5, &simplex[n].0) };
            let fc = eval(&xc);
            evals += 1;
            if fc < simplex[n].1.min(fr) {
                simplex[n] = (xc, fc);
            } else {
                let x_best = simplex[0].0.clone();
                for k in 1..=n {
                    let v: Vec<f64> = x_best.iter().zip(&simplex[k].0).map(|(b, w)| b + 0.5 * (w - b)).collect();
                    let fv = eval(&v);
                    simplex[k] = (v, fv);
                }
                evals += n;
            }
        }
    }
    simplex.sort_by(cmp);
    let (x, fx) = simplex.swap_remove(0);
    (x, fx)
}

fn run_once<F: FnMut(&[f64]) -> f64>(f: &mut Counted<F>, x0: &[f64], f0: f64, opts: &OptimOptions) -> RunOutcome {
    let mut out = bfgs(f, x0, f0, opts);
    if opts.polish_evals > 0 && out.fx.is_finite() {
        let mut call = |z: &[f64]| f.call(z);
        let (xp, fp) = nelder_mead(&mut call, &out.x, out.fx, opts.polish_evals);
        if fp < out.fx - opts.f_tol * (1.0 + out.fx.abs()) {
            let again = bfgs(f, &xp, fp, opts);
            out = RunOutcome { iterations: out.iterations + again.iterations, ..again };
        } else if fp < out.fx {
            out.x = xp;
            out.fx = fp;
        }
    }
    out
}

/// Minimises `f` from `x0`. Non-finite objective values act as an infinite
/// penalty.
pub fn minimize<F: FnMut(&[f64]) -> f64>(f: F, x0: &[f64], opts: &OptimOptions) -> OptimResult {
    let mut counted = Counted { f, evals: 0 };
    let f_start = counted.call(x0);
    let mut best = run_once(&mut counted, x0, f_start, opts);
    let mut iterations = best.iterations;
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut attempt = 0;
    while !best.converged && attempt < opts.restarts {
        attempt += 1;
        let base = if best.fx.is_finite() { best.x.clone() } else { x0.to_vec() };
        let scale = 0.25 * attempt as f64;
        let start: Vec<f64> = base
            .iter()
            .map(|v| {
                let z: f64 = StandardNormal.sample(&mut rng);
                v + scale * z * v.abs().max(1.0)
            })
            .collect();
        let fs = counted.call(&start);
        if !fs.is_finite() {
            continue;
        }
        let run = run_once(&mut counted, &start, fs, opts);
        iterations += run.iterations;
        if run.fx < best.fx {
            best = run;
        } else if run.converged && run.fx <= best.fx + 1e-9 * (1.0 + best.fx.abs()) {
            // a converged restart reached the same optimum
            best.converged = true;
        }
    }
    OptimResult {
        x: best.x,
        fx: best.fx,
        f_start,
        converged: best.converged,
        iterations,
        evaluations: counted.evals,
    }
}
