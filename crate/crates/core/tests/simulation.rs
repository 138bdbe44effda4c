use crashlens::model::{hazard_integral, CrashProcessParams};
use crashlens::simulation::{
    lattice_sweep, lattice_sweep_observed, simulate_ensemble, JumpMode, Lattice, LatticeConfig, PathConfig,
};
use statrs::distribution::{ContinuousCDF, Normal};

fn process() -> CrashProcessParams {
    CrashProcessParams::new(0.05, 0.02, 0.5, 100.0, 7.0, 0.4, 0.2).unwrap()
}

fn path_config(dt: f64) -> PathConfig {
    PathConfig { process: process(), p0: 1.0, t0: 0.0, t_end: 90.0, dt, seed: 2024 }
}

#[test]
fn martingale_within_three_standard_errors() {
    for dt in [0.5, 0.25] {
        let stats = simulate_ensemble(&path_config(dt), 10_000, JumpMode::Active).unwrap();
        for checkpoint in (10..=90).step_by(10) {
            let k = stats.times.iter().position(|&t| (t - f64::from(checkpoint)).abs() < 1e-9).unwrap();
            let (m, se) = (stats.mean_ratio[k], stats.std_error[k]);
            assert!((m - 1.0).abs() < 3.0 * se, "dt {dt}, t {checkpoint}: mean {m}, se {se}");
        }
    }
}

#[test]
fn crash_frequency_follows_survival_law() {
    let c = path_config(0.25);
    let stats = simulate_ensemble(&c, 10_000, JumpMode::Active).unwrap();
    let last = stats.times.len() - 1;
    let integral = hazard_integral(&c.process, c.t0, c.t_end, 100_000).unwrap();
    let want = 1.0 - (-integral).exp();
    let got = stats.crashed_fraction[last];
    let se = (want * (1.0 - want) / 10_000.0).sqrt();
    // discretisation bias is O(dt) in the integral; allow it on top of sampling noise
    assert!((got - want).abs() < 4.0 * se + 0.01, "{got} vs {want}");
    assert!(stats.crashed_fraction.windows(2).all(|w| w[0] <= w[1]));
}

#[test]
fn suppressed_jumps_drift_upwards() {
    let stats = simulate_ensemble(&path_config(0.5), 64, JumpMode::Suppressed).unwrap();
    assert!(stats.crashed_fraction.iter().all(|&c| c == 0.0));
    assert!(stats.mean_ratio.windows(2).all(|w| w[1] > w[0]));
    assert!(stats.std_error.iter().all(|&s| s < 1e-12));
}

#[test]
fn per_site_update_frequencies_match_gaussian_cdf() {
    let config = LatticeConfig { side: 4, coupling: 0.3, sigma: 1.0, sweeps: 0, seed: 11 };
    let normal = Normal::standard();
    let mut lattice = Lattice::all_up(4);
    // counts[field index][0] = updates seen, [1] = updates to +1
    let mut counts = [[0u32; 2]; 5];
    for sweep in 0..10_000u64 {
        let neighbours: Vec<[usize; 4]> = (0..16).map(|s| lattice.neighbours(s)).collect();
        lattice_sweep_observed(&mut lattice, &config, sweep, |site, before, new| {
            let field: i32 = neighbours[site].iter().map(|&j| i32::from(before[j])).sum();
            let slot = ((field + 4) / 2) as usize;
            counts[slot][0] += 1;
            if new == 1 {
                counts[slot][1] += 1;
            }
        })
        .unwrap();
    }
    let mut checked = 0;
    for (slot, [seen, up]) in counts.iter().enumerate() {
        if *seen < 2_000 {
            continue;
        }
        let field = slot as f64 * 2.0 - 4.0;
        let want = normal.cdf(config.coupling * field / config.sigma);
        let got = f64::from(*up) / f64::from(*seen);
        assert!((got - want).abs() <= 0.02, "field {field}: {got} vs {want} over {seen}");
        checked += 1;
    }
    assert!(checked >= 3);
}

#[test]
fn noiseless_lattice_keeps_consensus() {
    let config = LatticeConfig { side: 16, coupling: 0.5, sigma: 0.0, sweeps: 0, seed: 0 };
    let mut lattice = Lattice::all_up(16);
    for sweep in 0..50 {
        lattice_sweep(&mut lattice, &config, sweep).unwrap();
        assert_eq!(lattice.magnetization(), 1.0);
    }
}
