//! Square-lattice imitation model.
//!
//! Each agent takes `s_i = sign(K * sum_{j in N(i)} s_j + sigma * eps_i)` with
//! `eps_i ~ N(0, 1)` drawn afresh at every update and `sign(0) = +1`. `N(i)` is the
//! four nearest neighbours on a periodic `side x side` grid. A sweep updates every
//! site once in raster order, each update seeing the already-updated neighbours.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LatticeConfig {
    pub side: usize,
    /// Coupling strength `K`.
    pub coupling: f64,
    pub sigma: f64,
    pub sweeps: usize,
    pub seed: u64,
}

impl LatticeConfig {
    pub fn validate(&self) -> Result<()> {
        if self.side < 2 {
            return Err(invalid(format!("lattice side must be at least 2, got {}", self.side)));
        }
        if !(self.coupling >= 0.0 && self.coupling.is_finite()) {
            return Err(invalid(format!("coupling must be non-negative, got {}", self.coupling)));
        }
        if !(self.sigma >= 0.0 && self.sigma.is_finite()) {
            return Err(invalid(format!("sigma must be non-negative, got {}", self.sigma)));
        }
        if self.coupling == 0.0 && self.sigma == 0.0 {
            return Err(invalid("coupling and sigma cannot both be zero"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Lattice {
    side: usize,
    spins: Vec<i8>,
}

impl Lattice {
    pub fn all_up(side: usize) -> Self {
        Self { side, spins: vec![1; side * side] }
    }

    pub fn from_spins(side: usize, spins: Vec<i8>) -> Result<Self> {
        if spins.len() != side * side {
            return Err(invalid(format!("expected {} spins, got {}", side * side, spins.len())));
        }
        if spins.iter().any(|&s| s != 1 && s != -1) {
            return Err(invalid("spins must be +1 or -1"));
        }
        Ok(Self { side, spins })
    }

    pub fn side(&self) -> usize {
        self.side
    }

    pub fn spins(&self) -> &[i8] {
        &self.spins
    }

    /// The four periodic neighbours of `site` (row-major index).
    pub fn neighbours(&self, site: usize) -> [usize; 4] {
        let n = self.side;
        let (r, c) = (site / n, site % n);
        [((r + n - 1) % n) * n + c, ((r + 1) % n) * n + c, r * n + (c + n - 1) % n, r * n + (c + 1) % n]
    }

    pub fn magnetization(&self) -> f64 {
        self.spins.iter().map(|&s| f64::from(s)).sum::<f64>() / self.spins.len() as f64
    }
}

pub fn lattice_sweep(state: &mut Lattice, config: &LatticeConfig, sweep_index: u64) -> Result<()> {
    lattice_sweep_observed(state, config, sweep_index, |_, _, _| {})
}

/// One sweep; `observer(site, spins_before_update, new_spin)` runs at every update.
///
/// The noise stream is ChaCha8 seeded with `config.seed` on stream `sweep_index`.
pub fn lattice_sweep_observed(
    state: &mut Lattice,
    config: &LatticeConfig,
    sweep_index: u64,
    mut observer: impl FnMut(usize, &[i8], i8),
) -> Result<()> {
    config.validate()?;
    if state.side != config.side {
        return Err(invalid(format!("lattice side {} does not match config side {}", state.side, config.side)));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    rng.set_stream(sweep_index);
    for site in 0..state.spins.len() {
        let field: i32 = state.neighbours(site).iter().map(|&j| i32::from(state.spins[j])).sum();
        let eps: f64 = StandardNormal.sample(&mut rng);
        let v = config.coupling * f64::from(field) + config.sigma * eps;
        let new = if v >= 0.0 { 1 } else { -1 };
        observer(site, &state.spins, new);
        state.spins[site] = new;
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MagnetizationPoint {
    pub coupling: f64,
    pub mean_abs_magnetization: f64,
}

/// Mean `|m|` over `config.sweeps` measurement sweeps for each coupling in `k_grid`.
///
/// Every run starts from the all-up state and discards `burn_in` sweeps first
/// (default `10 * side`). Run `j` uses seed `config.seed + j`.
pub fn magnetization_curve(
    config: &LatticeConfig,
    k_grid: &[f64],
    burn_in: Option<usize>,
) -> Result<Vec<MagnetizationPoint>> {
    if k_grid.is_empty() {
        return Err(invalid("coupling grid is empty"));
    }
    if config.sweeps == 0 {
        return Err(invalid("need at least one measurement sweep"));
    }
    let burn_in = burn_in.unwrap_or(10 * config.side);
    let configs: Vec<LatticeConfig> = k_grid
        .iter()
        .enumerate()
        .map(|(j, &k)| LatticeConfig { coupling: k, seed: config.seed.wrapping_add(j as u64), ..*config })
        .collect();
    for c in &configs {
        c.validate()?;
    }
    configs
        .par_iter()
        .map(|c| {
            let mut lattice = Lattice::all_up(c.side);
            for s in 0..burn_in {
                lattice_sweep(&mut lattice, c, s as u64)?;
            }
            let mut total = 0.0;
            for s in 0..c.sweeps {
                lattice_sweep(&mut lattice, c, (burn_in + s) as u64)?;
                total += lattice.magnetization().abs();
            }
            Ok(MagnetizationPoint { coupling: c.coupling, mean_abs_magnetization: total / c.sweeps as f64 })
        })
        .collect()
}
