use std::path::PathBuf;

use chrono::NaiveDate;
use clap::{Args, Parser, Subcommand, ValueEnum};
use crashlens::data_io::{CsvOptions, DateWindow};
use crashlens::fitting::{Bounds, Interval};
use crashlens::scaling::Aggregation;

#[derive(Debug, Parser)]
#[command(
    name = "crashlens",
    version,
    about = "Log-periodic bubble diagnostics: minima scaling, LPPL fits, crash simulations"
)]
pub struct Cli {
    /// Increase log output (-v info, -vv debug).
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    pub verbose: u8,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Detect local minima and estimate the scaling ratio from consecutive triples.
    Minima(MinimaArgs),
    /// Fit the log-periodic power law to a price table.
    Fit(FitArgs),
    /// Generate synthetic series.
    #[command(subcommand)]
    Simulate(SimulateCommand),
}

#[derive(Debug, Args)]
pub struct InputArgs {
    /// CSV file with a header row.
    #[arg(long)]
    pub input: PathBuf,

    #[arg(long, default_value = "date")]
    pub date_col: String,

    #[arg(long, default_value = "close")]
    pub price_col: String,

    /// Treat the table as undated and keep file order.
    #[arg(long, conflicts_with_all = ["from", "to"])]
    pub no_dates: bool,

    /// First date kept (inclusive, YYYY-MM-DD).
    #[arg(long, value_parser = parse_day)]
    pub from: Option<NaiveDate>,

    /// Last date kept (inclusive, YYYY-MM-DD).
    #[arg(long, value_parser = parse_day)]
    pub to: Option<NaiveDate>,
}

impl InputArgs {
    pub fn csv_options(&self) -> CsvOptions {
        CsvOptions {
            date_column: (!self.no_dates).then(|| self.date_col.clone()),
            price_column: self.price_col.clone(),
            window: DateWindow { from: self.from, to: self.to },
        }
    }
}

#[derive(Debug, Args)]
pub struct MinimaOptions {
    /// Half-width of the minimum detection window, in observations.
    #[arg(long, default_value_t = 10)]
    pub win: usize,

    /// Width of the centred moving average applied before detection (1 = none).
    #[arg(long, default_value_t = 1)]
    pub smooth: usize,

    #[arg(long, value_enum, default_value_t = AggregateArg::Last)]
    pub aggregate: AggregateArg,
}

#[derive(Debug, Args)]
pub struct MinimaArgs {
    #[command(flatten)]
    pub input: InputArgs,

    #[command(flatten)]
    pub minima: MinimaOptions,

    /// Write the JSON report here instead of stdout.
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct FitArgs {
    #[command(flatten)]
    pub input: InputArgs,

    /// Search box, e.g. `tc=600:700,omega=15:20,alpha=0.1:1`. Keys: tc, omega, alpha, phi, psi.
    #[arg(long, value_parser = parse_bounds)]
    pub bounds: Option<BoundsOverride>,

    #[arg(long, value_parser = clap::value_parser!(u8).range(1..=2), default_value_t = 1)]
    pub harmonic: u8,

    /// Number of random starting points.
    #[arg(long, default_value_t = 16)]
    pub starts: usize,

    #[arg(long, env = "CRASHLENS_SEED", default_value_t = 0)]
    pub seed: u64,

    #[arg(long, value_enum, default_value_t = InitArg::None)]
    pub init: InitArg,

    #[command(flatten)]
    pub minima: MinimaOptions,

    /// Drop the B < 0 constraint.
    #[arg(long)]
    pub free_b: bool,

    #[arg(long, default_value_t = 3000)]
    pub max_iter: usize,

    /// Write observed/fitted values here (CSV) plus a JSON summary next to it.
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum InitArg {
    None,
    Minima,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum AggregateArg {
    Last,
    Mean,
}

impl From<AggregateArg> for Aggregation {
    fn from(a: AggregateArg) -> Self {
        match a {
            AggregateArg::Last => Aggregation::LastTriple,
            AggregateArg::Mean => Aggregation::MeanOverTriples,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct BoundsOverride {
    pub t_c: Option<Interval>,
    pub omega: Option<Interval>,
    pub alpha: Option<Interval>,
    pub phi: Option<Interval>,
    pub psi: Option<Interval>,
}

impl BoundsOverride {
    pub fn apply(&self, bounds: &mut Bounds) {
        let slots = [
            (&self.t_c, &mut bounds.t_c),
            (&self.omega, &mut bounds.omega),
            (&self.alpha, &mut bounds.alpha),
            (&self.phi, &mut bounds.phi),
            (&self.psi, &mut bounds.psi),
        ];
        for (over, slot) in slots {
            if let Some(i) = over {
                *slot = *i;
            }
        }
    }
}

fn parse_day(s: &str) -> Result<NaiveDate, String> {
    NaiveDate::parse_from_str(s, "%Y-%m-%d").map_err(|e| format!("expected YYYY-MM-DD: {e}"))
}

pub fn parse_bounds(s: &str) -> Result<BoundsOverride, String> {
    let mut out = BoundsOverride::default();
    for part in s.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        let (key, range) = part.split_once('=').ok_or_else(|| format!("`{part}`: expected key=lo:hi"))?;
        let (lo, hi) = range.split_once(':').ok_or_else(|| format!("`{part}`: expected key=lo:hi"))?;
        let lo: f64 = lo.trim().parse().map_err(|_| format!("`{part}`: bad lower bound"))?;
        let hi: f64 = hi.trim().parse().map_err(|_| format!("`{part}`: bad upper bound"))?;
        if !(lo.is_finite() && hi.is_finite() && lo < hi) {
            return Err(format!("`{part}`: need finite lo < hi"));
        }
        let slot = match key.trim() {
            "tc" | "t_c" => &mut out.t_c,
            "omega" => &mut out.omega,
            "alpha" => &mut out.alpha,
            "phi" => &mut out.phi,
            "psi" => &mut out.psi,
            other => return Err(format!("unknown bound `{other}` (expected tc, omega, alpha, phi, psi)")),
        };
        if slot.replace(Interval::new(lo, hi)).is_some() {
            return Err(format!("bound `{}` given twice", key.trim()));
        }
    }
    Ok(out)
}

#[derive(Debug, Subcommand)]
pub enum SimulateCommand {
    /// Log-price curve on integer times, optionally with Gaussian noise.
    Lppl(LpplArgs),
    /// Stochastic price path(s) of the hazard-rate crash process.
    Path(PathArgs),
    /// Deterministic pre-crash log-price of the crash process.
    Nocrash(NocrashArgs),
    /// Imitation lattice: magnetization per sweep, or a magnetization curve over couplings.
    Lattice(LatticeArgs),
}

#[derive(Debug, Args)]
pub struct LpplArgs {
    #[arg(long, allow_hyphen_values = true)]
    pub a: f64,
    #[arg(long, allow_hyphen_values = true)]
    pub b: f64,
    #[arg(long, allow_hyphen_values = true)]
    pub c: f64,
    #[arg(long)]
    pub alpha: f64,
    #[arg(long)]
    pub tc: f64,
    #[arg(long, allow_hyphen_values = true, default_value_t = 0.0)]
    pub phi: f64,
    #[arg(long)]
    pub omega: f64,
    /// Second-harmonic amplitude; requires --psi.
    #[arg(long, allow_hyphen_values = true, requires = "psi")]
    pub d: Option<f64>,
    #[arg(long, allow_hyphen_values = true, requires = "d")]
    pub psi: Option<f64>,
    #[arg(long = "t0", allow_hyphen_values = true, default_value_t = 0.0)]
    pub t0: f64,
    #[arg(long)]
    pub t_end: f64,
    /// Standard deviation of the additive log-price noise.
    #[arg(long, default_value_t = 0.0)]
    pub noise_sd: f64,
    #[arg(long, env = "CRASHLENS_SEED", default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct HazardArgs {
    #[arg(long)]
    pub b0: f64,
    #[arg(long, allow_hyphen_values = true, default_value_t = 0.0)]
    pub b1: f64,
    #[arg(long)]
    pub beta: f64,
    #[arg(long)]
    pub tc: f64,
    #[arg(long)]
    pub omega: f64,
    #[arg(long, allow_hyphen_values = true, default_value_t = 0.0)]
    pub psi_prime: f64,
    /// Fractional price drop at the crash.
    #[arg(long)]
    pub kappa: f64,
    #[arg(long, default_value_t = 1.0)]
    pub p0: f64,
    #[arg(long = "t0", allow_hyphen_values = true, default_value_t = 0.0)]
    pub t0: f64,
    #[arg(long)]
    pub t_end: f64,
    #[arg(long, default_value_t = 1.0)]
    pub dt: f64,
}

#[derive(Debug, Args)]
pub struct PathArgs {
    #[command(flatten)]
    pub hazard: HazardArgs,
    /// Paths to simulate; more than one writes ensemble statistics instead of a path.
    #[arg(long, default_value_t = 1)]
    pub paths: usize,
    /// Keep the drift but never fire the crash.
    #[arg(long)]
    pub suppress_crash: bool,
    #[arg(long, env = "CRASHLENS_SEED", default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct NocrashArgs {
    #[command(flatten)]
    pub hazard: HazardArgs,
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct LatticeArgs {
    #[arg(long, default_value_t = 32)]
    pub side: usize,
    /// Imitation strength K.
    #[arg(long, default_value_t = 0.0)]
    pub coupling: f64,
    /// Idiosyncratic noise scale.
    #[arg(long, default_value_t = 1.0)]
    pub sigma: f64,
    #[arg(long, default_value_t = 100)]
    pub sweeps: usize,
    /// Couplings `lo:hi:n` for a magnetization curve (overrides --coupling).
    #[arg(long, value_parser = parse_grid)]
    pub k_grid: Option<Grid>,
    /// Sweeps discarded before measuring a curve point (default 10 * side).
    #[arg(long)]
    pub burn_in: Option<usize>,
    #[arg(long, env = "CRASHLENS_SEED", default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Grid(pub Vec<f64>);

fn parse_grid(s: &str) -> Result<Grid, String> {
    let parts: Vec<&str> = s.split(':').collect();
    let [lo, hi, n] = parts[..] else {
        return Err("expected lo:hi:n".into());
    };
    let lo: f64 = lo.parse().map_err(|_| "bad lower end")?;
    let hi: f64 = hi.parse().map_err(|_| "bad upper end")?;
    let n: usize = n.parse().map_err(|_| "bad point count")?;
    if n == 0 || lo.partial_cmp(&hi).is_none_or(|o| o.is_gt()) || !lo.is_finite() || !hi.is_finite() {
        return Err("need lo <= hi and n >= 1".into());
    }
    if n == 1 {
        return Ok(Grid(vec![lo]));
    }
    Ok(Grid((0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect()))
}
