//! Synthetic data: noisy LPPL curves, crash-process price paths, and the imitation lattice.

mod lattice;
mod path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::data_io::PriceSeries;
use crate::error::{invalid, Error, Result};
use crate::model::{lppl_eval, LpplParams};

pub use lattice::{
    lattice_sweep, lattice_sweep_observed, magnetization_curve, Lattice, LatticeConfig, MagnetizationPoint,
};
pub use path::{
    hazard_grid, nocrash_log_price, simulate_ensemble, simulate_path, simulate_path_with, EnsembleStats, JumpMode,
    PathConfig, SimulatedPath,
};

/// LPPL values at every integer `t` in `[t0, t_end]` plus i.i.d. `N(0, noise_sd^2)` noise.
pub fn gen_lppl_series(params: &LpplParams, t0: f64, t_end: f64, noise_sd: f64, seed: u64) -> Result<PriceSeries> {
    params.validate()?;
    if !(noise_sd >= 0.0) || !noise_sd.is_finite() {
        return Err(invalid(format!("noise_sd must be non-negative, got {noise_sd}")));
    }
    if !(t_end < params.t_c) {
        return Err(Error::Domain(format!("window end {t_end} must precede t_c = {}", params.t_c)));
    }
    let (first, last) = (t0.ceil(), t_end.floor());
    if !(first <= last) {
        return Err(invalid(format!("window [{t0}, {t_end}] contains no integer time")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let noise = Normal::new(0.0, noise_sd).map_err(|e| invalid(e.to_string()))?;
    let count = (last - first) as usize + 1;
    let mut times = Vec::with_capacity(count);
    let mut values = Vec::with_capacity(count);
    for k in 0..count {
        let t = first + k as f64;
        let eps = if noise_sd > 0.0 { noise.sample(&mut rng) } else { 0.0 };
        times.push(t);
        values.push(lppl_eval(params, t)? + eps);
    }
    PriceSeries::new(times, values, None)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dow_jones() -> LpplParams {
        LpplParams::new(8.8106, -0.0165957, -0.0444881, 0.554188, 672.319, 0.0, 19.5637).unwrap()
    }

    #[test]
    fn noiseless_equals_curve() {
        let p = dow_jones();
        let s = gen_lppl_series(&p, 0.0, 408.0, 0.0, 1).unwrap();
        assert_eq!(s.len(), 409);
        for (t, y) in s.iter() {
            assert_eq!(y, lppl_eval(&p, t).unwrap());
        }
    }

    #[test]
    fn flat_when_amplitude_zero() {
        let p = LpplParams { b: 0.0, ..dow_jones() };
        let s = gen_lppl_series(&p, 3.5, 20.2, 0.0, 9).unwrap();
        assert_eq!(s.times().first(), Some(&4.0));
        assert_eq!(s.times().last(), Some(&20.0));
        assert!(s.log_prices().iter().all(|&y| y == p.a));
    }

    #[test]
    fn noise_variance_matches_request() {
        let p = dow_jones();
        let var: f64 = 3.51e-4;
        let mut within = 0;
        for seed in 0..20 {
            let s = gen_lppl_series(&p, 0.0, 408.0, var.sqrt(), seed).unwrap();
            let sample: f64 =
                s.iter().map(|(t, y)| (y - lppl_eval(&p, t).unwrap()).powi(2)).sum::<f64>() / s.len() as f64;
            if (sample / var - 1.0).abs() < 0.25 {
                within += 1;
            }
        }
        assert_eq!(within, 20);
    }

    #[test]
    fn same_seed_same_series() {
        let p = dow_jones();
        let a = gen_lppl_series(&p, 0.0, 100.0, 0.01, 5).unwrap();
        let b = gen_lppl_series(&p, 0.0, 100.0, 0.01, 5).unwrap();
        let c = gen_lppl_series(&p, 0.0, 100.0, 0.01, 6).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn window_must_precede_tc() {
        let p = dow_jones();
        assert!(gen_lppl_series(&p, 0.0, 672.319, 0.0, 0).is_err());
        assert!(gen_lppl_series(&p, 0.0, 10.0, -1.0, 0).is_err());
    }
}
