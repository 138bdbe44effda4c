use std::fmt::Write as _;
use std::io::Write;
use std::path::Path;

use crashlens::data_io::{export_fit, ingest_csv, write_series};
use crashlens::fitting::{fit, FitSpec, HarmonicOrder};
use crashlens::model::{CrashProcessParams, LpplParams};
use crashlens::scaling::{
    consecutive_triples, detect_minima, scaling_from_minima, Aggregation, MinimaSet, ScalingEstimate, TripleEstimate,
};
use crashlens::simulation::{
    gen_lppl_series, lattice_sweep, magnetization_curve, nocrash_log_price, simulate_ensemble, simulate_path_with,
    JumpMode, Lattice, LatticeConfig, PathConfig,
};
use crashlens::PriceSeries;
use log::{info, warn};
use serde::Serialize;

use crate::args::{
    FitArgs, HazardArgs, InitArg, LatticeArgs, LpplArgs, MinimaArgs, MinimaOptions, NocrashArgs, PathArgs,
};
use crate::Failure;

pub fn minima(args: &MinimaArgs) -> Result<(), Failure> {
    let series = ingest_csv(&args.input.input, &args.input.csv_options())?;
    let set = detect_minima(&series, args.minima.win, args.minima.smooth)?;
    let aggregation: Aggregation = args.minima.aggregate.into();
    let estimate = match scaling_from_minima(&set, aggregation) {
        Ok(e) => Some(e),
        Err(e) => {
            warn!("no scaling estimate: {e}");
            None
        }
    };
    let report = MinimaReport {
        n_observations: series.len(),
        window: set.window,
        smoothing: set.smoothing,
        minima: set
            .indices
            .iter()
            .zip(&set.times)
            .map(|(&index, &time)| MinimumEntry { index, time, date: series.label(index).map(str::to_owned) })
            .collect(),
        triples: consecutive_triples(&set),
        aggregation,
        estimate,
    };
    emit(args.output.as_deref(), &json_bytes(&report)?)
}

#[derive(Serialize)]
struct MinimumEntry {
    index: usize,
    time: f64,
    date: Option<String>,
}

#[derive(Serialize)]
struct MinimaReport {
    n_observations: usize,
    window: usize,
    smoothing: usize,
    minima: Vec<MinimumEntry>,
    triples: Vec<TripleEstimate>,
    aggregation: Aggregation,
    estimate: Option<ScalingEstimate>,
}

pub fn fit_command(args: &FitArgs) -> Result<(), Failure> {
    let series = ingest_csv(&args.input.input, &args.input.csv_options())?;
    let mut spec = FitSpec::for_series(&series);
    if let Some(b) = &args.bounds {
        b.apply(&mut spec.bounds);
    }
    spec.harmonic = if args.harmonic == 2 { HarmonicOrder::Second } else { HarmonicOrder::First };
    spec.multistart = args.starts;
    spec.seed = args.seed;
    spec.b_negative = !args.free_b;
    spec.max_iterations = args.max_iter;
    spec.validate()?;

    let init = match args.init {
        InitArg::None => None,
        InitArg::Minima => Some(minima_estimate(&series, &args.minima)?),
    };
    if let Some(e) = &init {
        info!("minima estimate: lambda {} t_c {} omega {}", e.lambda, e.t_c, e.omega);
    }
    let result = fit(&series, &spec, init.as_ref())?;
    if !result.at_bounds.is_empty() {
        warn!("fit binds at bounds: {}", result.at_bounds.join(", "));
    }
    if let Some(path) = &args.output {
        export_fit(&series, &result, path)?;
    }
    emit(None, &json_bytes(&result.summary())?)?;
    if result.converged {
        Ok(())
    } else {
        Err(Failure::not_converged())
    }
}

fn minima_estimate(series: &PriceSeries, opts: &MinimaOptions) -> Result<ScalingEstimate, Failure> {
    let set: MinimaSet = detect_minima(series, opts.win, opts.smooth)?;
    Ok(scaling_from_minima(&set, opts.aggregate.into())?)
}

pub fn lppl(args: &LpplArgs) -> Result<(), Failure> {
    let mut params = LpplParams::new(args.a, args.b, args.c, args.alpha, args.tc, args.phi, args.omega)?;
    if let (Some(d), Some(psi)) = (args.d, args.psi) {
        params = params.with_second_harmonic(d, psi);
        params.validate()?;
    }
    let series = gen_lppl_series(&params, args.t0, args.t_end, args.noise_sd, args.seed)?;
    let mut buf = Vec::new();
    write_series(&series, &mut buf)?;
    emit(args.output.as_deref(), &buf)
}

fn path_config(h: &HazardArgs, seed: u64) -> Result<PathConfig, Failure> {
    let process = CrashProcessParams::new(h.b0, h.b1, h.beta, h.tc, h.omega, h.psi_prime, h.kappa)?;
    let config = PathConfig { process, p0: h.p0, t0: h.t0, t_end: h.t_end, dt: h.dt, seed };
    config.validate()?;
    Ok(config)
}

pub fn path(args: &PathArgs) -> Result<(), Failure> {
    let config = path_config(&args.hazard, args.seed)?;
    let mode = if args.suppress_crash { JumpMode::Suppressed } else { JumpMode::Active };
    let mut out = String::new();
    if args.paths > 1 {
        let stats = simulate_ensemble(&config, args.paths, mode)?;
        out.push_str("time,mean_ratio,std_error,crashed_fraction\n");
        for k in 0..stats.times.len() {
            let _ = writeln!(
                out,
                "{},{},{},{}",
                stats.times[k], stats.mean_ratio[k], stats.std_error[k], stats.crashed_fraction[k]
            );
        }
    } else if args.paths == 1 {
        let sim = simulate_path_with(&config, mode)?;
        out.push_str("time,price,log_price,crashed\n");
        for ((t, y), p) in sim.series.iter().zip(&sim.prices) {
            let crashed = sim.crash_time.is_some_and(|c| t >= c);
            let _ = writeln!(out, "{},{},{},{}", t, p, y, u8::from(crashed));
        }
        match sim.crash_time {
            Some(c) => info!("crash at t = {c}"),
            None => info!("no crash before t_end"),
        }
    } else {
        return Err(Failure::validation("--paths must be at least 1"));
    }
    emit(args.output.as_deref(), out.as_bytes())
}

pub fn nocrash(args: &NocrashArgs) -> Result<(), Failure> {
    let config = path_config(&args.hazard, 0)?;
    let series = nocrash_log_price(&config)?;
    let mut buf = Vec::new();
    write_series(&series, &mut buf)?;
    emit(args.output.as_deref(), &buf)
}

pub fn lattice(args: &LatticeArgs) -> Result<(), Failure> {
    let config = LatticeConfig {
        side: args.side,
        coupling: args.coupling,
        sigma: args.sigma,
        sweeps: args.sweeps,
        seed: args.seed,
    };
    let mut out = String::new();
    if let Some(grid) = &args.k_grid {
        let curve = magnetization_curve(&config, &grid.0, args.burn_in)?;
        out.push_str("coupling,mean_abs_magnetization\n");
        for p in curve {
            let _ = writeln!(out, "{},{}", p.coupling, p.mean_abs_magnetization);
        }
    } else {
        config.validate()?;
        if args.burn_in.is_some() {
            warn!("--burn-in only applies with --k-grid");
        }
        let mut state = Lattice::all_up(config.side);
        out.push_str("sweep,magnetization\n");
        for s in 0..config.sweeps {
            lattice_sweep(&mut state, &config, s as u64)?;
            let _ = writeln!(out, "{},{}", s + 1, state.magnetization());
        }
    }
    emit(args.output.as_deref(), out.as_bytes())
}

fn json_bytes(value: &impl Serialize) -> Result<Vec<u8>, Failure> {
    let mut buf = serde_json::to_vec_pretty(value).map_err(crashlens::Error::from)?;
    buf.push(b'\n');
    Ok(buf)
}

fn emit(path: Option<&Path>, bytes: &[u8]) -> Result<(), Failure> {
    match path {
        Some(p) => std::fs::write(p, bytes).map_err(crashlens::Error::from)?,
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(bytes).and_then(|_| stdout.flush()).map_err(crashlens::Error::from)?;
        }
    }
    Ok(())
}
