//! Price paths of the hazard-rate crash process.
//!
//! On a grid `t_k = t0 + k dt` the price grows by `1 + kappa h(t_k) dt` per step, the
//! drift that makes the price a martingale to first order in `dt`. With probability
//! `h(t_k) dt` the crash fires during the step and the price additionally drops by the
//! fraction `kappa`. After the crash the price stays flat.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data_io::PriceSeries;
use crate::error::{invalid, Result};
use crate::model::{hazard_at_distance, hazard_integral, CrashProcessParams};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PathConfig {
    pub process: CrashProcessParams,
    pub p0: f64,
    pub t0: f64,
    pub t_end: f64,
    pub dt: f64,
    pub seed: u64,
}

impl PathConfig {
    pub fn validate(&self) -> Result<()> {
        self.process.validate()?;
        if !(self.process.kappa < 1.0) {
            return Err(invalid("a crash with kappa = 1 wipes out the price; need kappa < 1"));
        }
        if !(self.p0 > 0.0) || !self.p0.is_finite() {
            return Err(invalid(format!("initial price must be positive, got {}", self.p0)));
        }
        if !(self.dt > 0.0) || !self.dt.is_finite() {
            return Err(invalid(format!("time step must be positive, got {}", self.dt)));
        }
        if !(self.t0 < self.t_end && self.t_end < self.process.t_c) {
            return Err(invalid(format!(
                "need t0 < t_end < t_c, got {} < {} < {}",
                self.t0, self.t_end, self.process.t_c
            )));
        }
        let worst = hazard_grid(self).into_iter().fold(0.0, f64::max);
        if !(worst * self.dt < 1.0) {
            return Err(invalid(format!("time step too large: max h(t) dt = {} must stay below 1", worst * self.dt)));
        }
        Ok(())
    }

    /// Number of steps; the last grid point is the largest `t0 + k dt <= t_end`.
    pub fn steps(&self) -> usize {
        ((self.t_end - self.t0) / self.dt + 1e-9).floor() as usize
    }

    pub fn grid(&self) -> Vec<f64> {
        (0..=self.steps()).map(|k| self.t0 + k as f64 * self.dt).collect()
    }
}

/// Hazard rate at every grid point except the last.
pub fn hazard_grid(config: &PathConfig) -> Vec<f64> {
    let p = &config.process;
    (0..config.steps()).map(|k| hazard_at_distance(p, p.t_c - (config.t0 + k as f64 * config.dt))).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum JumpMode {
    #[default]
    Active,
    /// Keep the drift but never fire the crash.
    Suppressed,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimulatedPath {
    /// Log-prices on the config grid.
    pub series: PriceSeries,
    /// The same path in price units, as tracked by the simulation.
    pub prices: Vec<f64>,
    /// End of the step during which the crash fired.
    pub crash_time: Option<f64>,
}

pub fn simulate_path(config: &PathConfig) -> Result<SimulatedPath> {
    simulate_path_with(config, JumpMode::Active)
}

pub fn simulate_path_with(config: &PathConfig, mode: JumpMode) -> Result<SimulatedPath> {
    config.validate()?;
    let hazard = hazard_grid(config);
    let mut rng = path_rng(config.seed, 0);
    let (prices, crash_step) = run_path(&hazard, config, mode, &mut rng);
    let times = config.grid();
    let crash_time = crash_step.map(|k| times[k]);
    let log_p = prices.iter().map(|p| p.ln()).collect();
    Ok(SimulatedPath { series: PriceSeries::new(times, log_p, None)?, prices, crash_time })
}

fn path_rng(seed: u64, path: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(path);
    rng
}

/// Returns prices and the grid index at which the crash took effect.
fn run_path(hazard: &[f64], config: &PathConfig, mode: JumpMode, rng: &mut ChaCha8Rng) -> (Vec<f64>, Option<usize>) {
    let kappa = config.process.kappa;
    let mut out = Vec::with_capacity(hazard.len() + 1);
    let mut p = config.p0;
    out.push(p);
    let mut crashed = None;
    for (k, h) in hazard.iter().enumerate() {
        if crashed.is_none() {
            p *= 1.0 + kappa * h * config.dt;
            if mode == JumpMode::Active && rng.random::<f64>() < h * config.dt {
                p *= 1.0 - kappa;
                crashed = Some(k + 1);
            }
        }
        out.push(p);
    }
    (out, crashed)
}

/// Cross-path statistics of `p(t) / p0` at every grid point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsembleStats {
    pub times: Vec<f64>,
    pub mean_ratio: Vec<f64>,
    /// Standard error of `mean_ratio`.
    pub std_error: Vec<f64>,
    pub crashed_fraction: Vec<f64>,
    pub paths: usize,
}

const BLOCK: usize = 256;

/// Simulates `n_paths` independent paths (path `i` uses ChaCha stream `i` of `config.seed`).
///
/// Paths are accumulated in fixed blocks that are combined in order, so the result does
/// not depend on the number of worker threads.
pub fn simulate_ensemble(config: &PathConfig, n_paths: usize, mode: JumpMode) -> Result<EnsembleStats> {
    config.validate()?;
    if n_paths < 2 {
        return Err(invalid("an ensemble needs at least two paths"));
    }
    let hazard = hazard_grid(config);
    let len = hazard.len() + 1;
    let blocks: Vec<Moments> = (0..n_paths.div_ceil(BLOCK))
        .into_par_iter()
        .map(|b| {
            let mut m = Moments::new(len);
            for i in b * BLOCK..((b + 1) * BLOCK).min(n_paths) {
                let mut rng = path_rng(config.seed, i as u64);
                let (prices, crash) = run_path(&hazard, config, mode, &mut rng);
                m.push(prices.iter().map(|p| p / config.p0), crash);
            }
            m
        })
        .collect();

    let mut total = Moments::new(len);
    for b in &blocks {
        total.merge(b);
    }
    let n = n_paths as f64;
    let std_error = total.m2.iter().map(|m2| (m2 / (n - 1.0) / n).sqrt()).collect();
    Ok(EnsembleStats {
        times: config.grid(),
        mean_ratio: total.mean,
        std_error,
        crashed_fraction: total.crashed.iter().map(|c| c / n).collect(),
        paths: n_paths,
    })
}

/// Running mean and centred second moment (Welford), mergeable in a fixed order.
struct Moments {
    count: f64,
    mean: Vec<f64>,
    m2: Vec<f64>,
    crashed: Vec<f64>,
}

impl Moments {
    fn new(len: usize) -> Self {
        Self { count: 0.0, mean: vec![0.0; len], m2: vec![0.0; len], crashed: vec![0.0; len] }
    }

    fn push(&mut self, ratios: impl Iterator<Item = f64>, crash: Option<usize>) {
        self.count += 1.0;
        for (k, r) in ratios.enumerate() {
            let delta = r - self.mean[k];
            self.mean[k] += delta / self.count;
            self.m2[k] += delta * (r - self.mean[k]);
        }
        if let Some(c) = crash {
            for v in &mut self.crashed[c..] {
                *v += 1.0;
            }
        }
    }

    fn merge(&mut self, other: &Moments) {
        let n = self.count + other.count;
        if other.count == 0.0 {
            return;
        }
        for k in 0..self.mean.len() {
            let delta = other.mean[k] - self.mean[k];
            self.mean[k] += delta * other.count / n;
            self.m2[k] += other.m2[k] + delta * delta * self.count * other.count / n;
            self.crashed[k] += other.crashed[k];
        }
        self.count = n;
    }
}

/// Deterministic pre-crash path `log p(t) = log p0 + kappa * integral_{t0}^{t} h`.
///
/// Each grid interval is integrated by the midpoint rule with panels no wider than
/// `min(1, t_c - t_end) / 256`.
pub fn nocrash_log_price(config: &PathConfig) -> Result<PriceSeries> {
    config.validate()?;
    let p = &config.process;
    let panel = (p.t_c - config.t_end).min(1.0) / 256.0;
    let sub = ((config.dt / panel).ceil() as usize).max(1);
    let times = config.grid();
    let mut values = Vec::with_capacity(times.len());
    let mut acc = 0.0;
    values.push(config.p0.ln());
    for w in times.windows(2) {
        acc += hazard_integral(p, w[0], w[1], sub)?;
        values.push(config.p0.ln() + p.kappa * acc);
    }
    PriceSeries::new(times, values, None)
}
