//! Monte Carlo oracle for the shock-count and time-to-failure laws.
//!
//! Replication `i` draws from `ChaCha8Rng::seed_from_u64(seed)` switched to
//! stream `i`, so results are identical for any number of workers. Samples
//! are kept in replication order and summarised with pairwise sums.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::continuous::ContinuousPhaseType;
use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::numeric::pairwise_sum;
use crate::system_model::{full_mask, SystemConfig};
use crate::tiesets::{enumerate_min_tiesets_with, TieSetCollection};

pub const DEFAULT_REPLICATIONS: usize = 100_000;

const Z_95: f64 = 1.959_963_984_540_054;
const Z_99: f64 = 2.575_829_303_548_901;

/// The generator for one replication.
pub fn replication_rng(seed: u64, replication: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(replication);
    rng
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimulationResult {
    pub replications: usize,
    pub seed: u64,
    pub mean: f64,
    /// Unbiased sample variance.
    pub variance: f64,
    pub std_error: f64,
    pub half_width_95: f64,
    samples: Vec<f64>,
}

impl SimulationResult {
    fn from_samples(samples: Vec<f64>, seed: u64) -> Self {
        let reps = samples.len();
        let mean = pairwise_sum(&samples) / reps as f64;
        let squares: Vec<f64> = samples.iter().map(|x| (x - mean) * (x - mean)).collect();
        let variance = if reps > 1 {
            pairwise_sum(&squares) / (reps - 1) as f64
        } else {
            0.0
        };
        let std_error = (variance / reps as f64).sqrt();
        SimulationResult {
            replications: reps,
            seed,
            mean,
            variance,
            std_error,
            half_width_95: Z_95 * std_error,
            samples,
        }
    }

    /// Samples in replication order.
    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn half_width_99(&self) -> f64 {
        Z_99 * self.std_error
    }

    /// Normal-approximation interval for the mean at level 0.95 or 0.99.
    pub fn confidence_interval(&self, level: f64) -> Result<(f64, f64)> {
        let h = if (level - 0.95).abs() < 1e-12 {
            self.half_width_95
        } else if (level - 0.99).abs() < 1e-12 {
            self.half_width_99()
        } else {
            return Err(Error::InvalidConfig(format!(
                "confidence level {level} not supported (use 0.95 or 0.99)"
            )));
        };
        Ok((self.mean - h, self.mean + h))
    }

    /// Empirical quantile (lower order statistic) for `p` in `[0, 1]`.
    pub fn quantile(&self, p: f64) -> f64 {
        let mut sorted = self.samples.clone();
        sorted.sort_by(f64::total_cmp);
        let idx = ((p.clamp(0.0, 1.0) * sorted.len() as f64).ceil() as usize).clamp(1, sorted.len());
        sorted[idx - 1]
    }

    /// Fraction of samples equal to `value`, with its standard error.
    pub fn proportion_equal(&self, value: f64) -> (f64, f64) {
        self.proportion(|x| x == value)
    }

    /// Fraction of samples exceeding `z`, with its standard error.
    pub fn proportion_above(&self, z: f64) -> (f64, f64) {
        self.proportion(|x| x > z)
    }

    fn proportion(&self, pred: impl Fn(f64) -> bool) -> (f64, f64) {
        let n = self.replications as f64;
        let p = self.samples.iter().filter(|x| pred(**x)).count() as f64 / n;
        (p, (p * (1.0 - p) / n).sqrt())
    }

    /// Equal-width histogram `(bin_left, bin_right, count)` over
    /// `[min, max]`. Integer data get unit-width bins centred on each value.
    pub fn histogram(&self, bins: usize) -> Vec<(f64, f64, usize)> {
        let lo = self.samples.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = self.samples.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let integral = self.samples.iter().all(|x| x.fract() == 0.0);
        let (lo, width, bins) = if integral {
            (lo - 0.5, 1.0, (hi - lo) as usize + 1)
        } else if hi > lo {
            let bins = bins.max(1);
            (lo, (hi - lo) / bins as f64, bins)
        } else {
            (lo - 0.5, 1.0, 1)
        };
        let mut counts = vec![0usize; bins];
        for x in &self.samples {
            let b = (((x - lo) / width) as usize).min(bins - 1);
            counts[b] += 1;
        }
        counts
            .into_iter()
            .enumerate()
            .map(|(i, c)| (lo + i as f64 * width, lo + (i + 1) as f64 * width, c))
            .collect()
    }

    pub fn histogram_csv(&self, bins: usize) -> String {
        use crate::format::sig12;
        let mut out = String::from("bin_left,bin_right,count\n");
        for (l, r, c) in self.histogram(bins) {
            out.push_str(&format!("{},{},{}\n", sig12(l), sig12(r), c));
        }
        out
    }
}

/// Draws one value of `Y` by running its phase process to absorption.
pub fn sample_ph<R: Rng + ?Sized>(y: &ContinuousPhaseType, rng: &mut R) -> f64 {
    let k = y.phases();
    let t = y.generator();
    let mut phase = pick(rng, y.alpha().iter().copied(), 1.0);
    let mut elapsed = 0.0;
    loop {
        let i = match phase {
            Some(i) if i < k => i,
            _ => return elapsed,
        };
        let rate = -t[(i, i)];
        elapsed += -(1.0 - rng.random::<f64>()).ln() / rate;
        // phases other than i, then the exit as index k
        let weights = (0..k)
            .map(|j| if j == i { 0.0 } else { t[(i, j)] })
            .chain(std::iter::once(-t.row(i).sum()));
        phase = pick(rng, weights, rate);
    }
}

fn pick<R: Rng + ?Sized>(rng: &mut R, weights: impl Iterator<Item = f64>, total: f64) -> Option<usize> {
    let u = rng.random::<f64>() * total;
    let mut acc = 0.0;
    let mut last = None;
    for (i, w) in weights.enumerate() {
        if w <= 0.0 {
            continue;
        }
        acc += w;
        last = Some(i);
        if u < acc {
            return Some(i);
        }
    }
    last
}

/// One run of the shock process: the number of shocks until no tie-set
/// survives.
pub fn sample_sntf<R: Rng + ?Sized>(tiesets: &TieSetCollection, r: f64, rng: &mut R) -> u64 {
    let mut bits = full_mask(tiesets.n());
    let mut shocks = 0;
    loop {
        shocks += 1;
        let mut rest = bits;
        while rest != 0 {
            let unit = rest & rest.wrapping_neg();
            if !rng.random_bool(r) {
                bits &= !unit;
            }
            rest &= rest - 1;
        }
        if !tiesets.contains_tieset_bits(bits) {
            return shocks;
        }
    }
}

pub fn simulate_sntf(config: &SystemConfig, seed: u64, reps: usize) -> Result<SimulationResult> {
    simulate_sntf_with(config, seed, reps, Exec::default())
}

pub fn simulate_sntf_with(
    config: &SystemConfig,
    seed: u64,
    reps: usize,
    exec: Exec,
) -> Result<SimulationResult> {
    let tiesets = prepare(config, reps, exec)?;
    let samples = exec.map_range(reps, |i| {
        let mut rng = replication_rng(seed, i as u64);
        sample_sntf(&tiesets, config.r, &mut rng) as f64
    });
    Ok(SimulationResult::from_samples(samples, seed))
}

pub fn simulate_ttf(config: &SystemConfig, seed: u64, reps: usize) -> Result<SimulationResult> {
    simulate_ttf_with(config, seed, reps, Exec::default())
}

pub fn simulate_ttf_with(
    config: &SystemConfig,
    seed: u64,
    reps: usize,
    exec: Exec,
) -> Result<SimulationResult> {
    let y = config
        .shock
        .as_ref()
        .ok_or_else(|| Error::InvalidConfig("time-to-failure simulation needs an inter-shock law".into()))?
        .phase_type();
    let tiesets = prepare(config, reps, exec)?;
    let samples = exec.map_range(reps, |i| {
        let mut rng = replication_rng(seed, i as u64);
        let m = sample_sntf(&tiesets, config.r, &mut rng);
        (0..m).map(|_| sample_ph(&y, &mut rng)).sum()
    });
    Ok(SimulationResult::from_samples(samples, seed))
}

/// `reps` independent draws of `Y` from stream `i` for draw `i`.
pub fn simulate_ph(y: &ContinuousPhaseType, seed: u64, reps: usize, exec: Exec) -> Result<SimulationResult> {
    check_reps(reps)?;
    let samples = exec.map_range(reps, |i| sample_ph(y, &mut replication_rng(seed, i as u64)));
    Ok(SimulationResult::from_samples(samples, seed))
}

fn check_reps(reps: usize) -> Result<()> {
    if reps == 0 {
        return Err(Error::InvalidConfig("replications must be >= 1".into()));
    }
    Ok(())
}

fn prepare(config: &SystemConfig, reps: usize, exec: Exec) -> Result<TieSetCollection> {
    check_reps(reps)?;
    config.validate()?;
    enumerate_min_tiesets_with(config.n, config.k, config.bc, exec)
}
