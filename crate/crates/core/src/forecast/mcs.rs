use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Equal-predictive-ability statistic.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum McsStatistic {
    /// `T_R = max_ij |d_ij| / se(d_ij)`.
    Range,
    /// `T_SQ = sum_{i<j} d_ij^2 / var(d_ij)`.
    SemiQuadratic,
}

impl McsStatistic {
    pub fn label(self) -> &'static str {
        match self {
            McsStatistic::Range => "T_R",
            McsStatistic::SemiQuadratic => "T_SQ",
        }
    }
}

impl fmt::Display for McsStatistic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for McsStatistic {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_uppercase().replace(['_', '-'], "").as_str() {
            "TR" | "R" | "RANGE" => Ok(McsStatistic::Range),
            "TSQ" | "SQ" | "SEMIQUADRATIC" => Ok(McsStatistic::SemiQuadratic),
            _ => Err(Error::invalid(format!("unknown MCS statistic {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McsOptions {
    pub statistic: McsStatistic,
    pub alpha: f64,
    pub n_boot: usize,
    pub block_len: usize,
    pub seed: u64,
}

impl Default for McsOptions {
    fn default() -> Self {
        McsOptions { statistic: McsStatistic::Range, alpha: 0.10, n_boot: 5000, block_len: 12, seed: 1 }
    }
}

/// One rung of the elimination ladder.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct McsEntry {
    pub model: String,
    pub mean_loss: f64,
    /// MCS p-value (running maximum of the elimination p-values).
    pub p_value: f64,
    pub survivor: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct McsResult {
    /// Models in elimination order; the last entry is never eliminated.
    pub ladder: Vec<McsEntry>,
    pub survivors: Vec<String>,
    pub statistic: McsStatistic,
    pub alpha: f64,
}

impl McsResult {
    pub fn contains(&self, model: &str) -> bool {
        self.survivors.iter().any(|m| m == model)
    }
}

/// `x / sqrt(v)` where a zero variance makes any nonzero mean infinitely
/// significant and a zero mean insignificant.
fn standardize(x: f64, v: f64) -> f64 {
    if v > 0.0 {
        x / v.sqrt()
    } else if x == 0.0 {
        0.0
    } else {
        x.signum() * f64::INFINITY
    }
}

/// Model confidence set by iterative elimination. Differentials are
/// resampled with a circular block bootstrap shared by all models; the
/// model with the largest standardized excess loss is removed at each step,
/// and survivors are the models whose MCS p-value is at least `alpha`.
pub fn mcs(names: &[String], losses: &[Vec<f64>], opts: &McsOptions) -> Result<McsResult> {
    let m = losses.len();
    if m < 2 || names.len() != m {
        return Err(Error::invalid("MCS needs at least two named loss series"));
    }
    let t = losses[0].len();
    if t < 2 || losses.iter().any(|l| l.len() != t) {
        return Err(Error::invalid("loss series must have equal length of at least 2"));
    }
    if losses.iter().flatten().any(|v| !v.is_finite()) {
        return Err(Error::invalid("loss series contain non-finite values"));
    }
    if opts.n_boot == 0 || opts.block_len == 0 || !(opts.alpha > 0.0 && opts.alpha < 1.0) {
        return Err(Error::invalid("MCS needs n_boot > 0, block_len > 0 and alpha in (0, 1)"));
    }

    let means: Vec<f64> = losses.iter().map(|l| l.iter().sum::<f64>() / t as f64).collect();
    // bootstrap means per resample and model; each resample draws blocks of
    // consecutive periods with wrap-around
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut boot = vec![0.0; opts.n_boot * m];
    let mut idx = Vec::with_capacity(t);
    for b in 0..opts.n_boot {
        idx.clear();
        while idx.len() < t {
            let start = rng.random_range(0..t);
            for k in 0..opts.block_len.min(t - idx.len()) {
                idx.push((start + k) % t);
            }
        }
        for (i, l) in losses.iter().enumerate() {
            boot[b * m + i] = idx.iter().map(|&s| l[s]).sum::<f64>() / t as f64;
        }
    }

    let mut alive: Vec<usize> = (0..m).collect();
    let mut ladder = Vec::with_capacity(m);
    let mut running = 0.0f64;
    while alive.len() > 1 {
        let (p, worst) = elimination_step(&alive, &means, &boot, m, opts);
        running = running.max(p);
        ladder.push(McsEntry {
            model: names[worst].clone(),
            mean_loss: means[worst],
            p_value: running,
            survivor: running >= opts.alpha,
        });
        alive.retain(|&i| i != worst);
    }
    let last = alive[0];
    ladder.push(McsEntry { model: names[last].clone(), mean_loss: means[last], p_value: 1.0, survivor: true });
    let survivors = ladder.iter().filter(|e| e.survivor).map(|e| e.model.clone()).collect();
    Ok(McsResult { ladder, survivors, statistic: opts.statistic, alpha: opts.alpha })
}

/// Equal-predictive-ability p-value of the set `alive` and the index of the
/// model to remove.
fn elimination_step(alive: &[usize], means: &[f64], boot: &[f64], m: usize, opts: &McsOptions) -> (f64, usize) {
    let k = alive.len();
    let n_boot = opts.n_boot;
    let pair_list: Vec<(usize, usize)> = (0..k).flat_map(|a| ((a + 1)..k).map(move |b| (a, b))).collect();

    // variances of pairwise differentials and of deviations from the set mean
    let dbar = |a: usize, b: usize| means[alive[a]] - means[alive[b]];
    let set_mean = alive.iter().map(|&i| means[i]).sum::<f64>() / k as f64;
    let mut pair_var = vec![0.0; pair_list.len()];
    let mut dev_var = vec![0.0; k];
    let mut boot_set_mean = vec![0.0; n_boot];
    for b in 0..n_boot {
        let row = &boot[b * m..(b + 1) * m];
        let bm = alive.iter().map(|&i| row[i]).sum::<f64>() / k as f64;
        boot_set_mean[b] = bm;
        for (p, &(a, c)) in pair_list.iter().enumerate() {
            let z = (row[alive[a]] - row[alive[c]]) - dbar(a, c);
            pair_var[p] += z * z;
        }
        for a in 0..k {
            let z = (row[alive[a]] - bm) - (means[alive[a]] - set_mean);
            dev_var[a] += z * z;
        }
    }
    pair_var.iter_mut().for_each(|v| *v /= n_boot as f64);
    dev_var.iter_mut().for_each(|v| *v /= n_boot as f64);

    let stat_of = |diffs: &mut dyn Iterator<Item = (usize, f64)>| -> f64 {
        match opts.statistic {
            McsStatistic::Range => diffs.map(|(p, d)| standardize(d, pair_var[p]).abs()).fold(0.0, f64::max),
            McsStatistic::SemiQuadratic => diffs.map(|(p, d)| standardize(d, pair_var[p]).powi(2)).sum(),
        }
    };
    let observed = stat_of(&mut pair_list.iter().enumerate().map(|(p, &(a, c))| (p, dbar(a, c))));
    let mut exceed = 0usize;
    for b in 0..n_boot {
        let row = &boot[b * m..(b + 1) * m];
        let centred = |p: usize| {
            let (a, c) = pair_list[p];
            let d = (row[alive[a]] - row[alive[c]]) - dbar(a, c);
            if pair_var[p] > 0.0 {
                d
            } else {
                0.0
            }
        };
        let s = stat_of(&mut (0..pair_list.len()).map(|p| (p, centred(p))));
        if s >= observed {
            exceed += 1;
        }
    }
    let p_value = exceed as f64 / n_boot as f64;

    let worst = (0..k)
        .max_by(|&a, &c| {
            let ta = standardize(means[alive[a]] - set_mean, dev_var[a]);
            let tc = standardize(means[alive[c]] - set_mean, dev_var[c]);
            ta.total_cmp(&tc).then(c.cmp(&a))
        })
        .expect("non-empty set");
    (p_value, alive[worst])
}

#[cfg(test)]
mod tests {
    use super::*;

    fn names(k: usize) -> Vec<String> {
        (0..k).map(|i| format!("m{i}")).collect()
    }

    fn noise(t: usize, seed: u64) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..t).map(|_| rng.random::<f64>()).collect()
    }

    #[test]
    fn identical_losses_all_survive() {
        let l = noise(200, 1);
        let r = mcs(&names(3), &[l.clone(), l.clone(), l], &McsOptions { n_boot: 500, ..Default::default() }).unwrap();
        assert_eq!(r.survivors.len(), 3);
    }

    #[test]
    fn constant_shift_is_eliminated() {
        let l = noise(600, 2);
        let worse: Vec<f64> = l.iter().map(|v| v + 1.0).collect();
        let r = mcs(&names(2), &[worse, l], &McsOptions { n_boot: 500, ..Default::default() }).unwrap();
        assert_eq!(r.ladder[0].model, "m0");
        assert!(r.ladder[0].p_value < 1e-3);
        assert_eq!(r.survivors, vec!["m1".to_string()]);
    }

    #[test]
    fn statistic_names_parse() {
        assert_eq!("T_R".parse::<McsStatistic>().unwrap(), McsStatistic::Range);
        assert_eq!("tsq".parse::<McsStatistic>().unwrap(), McsStatistic::SemiQuadratic);
    }
}
