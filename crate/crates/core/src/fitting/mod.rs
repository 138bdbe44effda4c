//! Least-squares LPPL fitting inside a parameter box.
//!
//! The linear parameters `(A, B, C[, D])` are eliminated in closed form for every
//! candidate `(t_c, alpha, omega, phi[, psi])`, leaving a 4- or 5-dimensional search
//! that is run as a seeded multistart bounded simplex. An optional scaling estimate
//! (from the spacing of minima) fixes `t_c` and `omega` for a preliminary grid fit
//! over `(alpha, phi)` whose optimum becomes one of the starts.

mod linear;
mod simplex;

use std::f64::consts::TAU;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data_io::PriceSeries;
use crate::error::{invalid, Error, Result};
use crate::model::{lppl_eval, LpplParams, SecondHarmonic};
use crate::scaling::ScalingEstimate;

use linear::Nonlinear;
pub use linear::{reduce_linear, reduce_linear_second, LinearFit, B_THRESHOLD};
use simplex::{local_search, Dim, SimplexOptions};

/// Closed interval `[lo, hi]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub fn new(lo: f64, hi: f64) -> Self {
        Self { lo, hi }
    }

    pub fn contains(&self, x: f64) -> bool {
        self.lo <= x && x <= self.hi
    }

    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }

    fn clamp(&self, x: f64) -> f64 {
        x.clamp(self.lo, self.hi)
    }

    fn validate(&self, name: &str) -> Result<()> {
        if !(self.lo.is_finite() && self.hi.is_finite() && self.lo <= self.hi) {
            return Err(invalid(format!("{name} bounds [{}, {}] are empty or not finite", self.lo, self.hi)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bounds {
    pub t_c: Interval,
    pub omega: Interval,
    pub alpha: Interval,
    pub phi: Interval,
    pub psi: Interval,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HarmonicOrder {
    #[default]
    First,
    Second,
}

impl HarmonicOrder {
    pub fn param_count(self) -> usize {
        match self {
            HarmonicOrder::First => 7,
            HarmonicOrder::Second => 9,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitSpec {
    pub bounds: Bounds,
    /// Restrict the power-law amplitude to `B < 0`.
    pub b_negative: bool,
    pub harmonic: HarmonicOrder,
    pub multistart: usize,
    pub seed: u64,
    /// Simplex iterations per local search.
    pub max_iterations: usize,
    /// Relative spread of simplex values accepted as converged.
    pub tolerance: f64,
    /// Points per axis of the preliminary `(alpha, phi)` grid.
    pub grid: usize,
}

impl FitSpec {
    /// Defaults for a window: `omega` in [15, 20], `alpha` in [0.1, 1], free phases,
    /// `B < 0`, and `t_c` between one and `n` points past the last observation.
    pub fn for_series(series: &PriceSeries) -> Self {
        let last = series.last_time().unwrap_or(0.0);
        let n = series.len().max(1) as f64;
        Self {
            bounds: Bounds {
                t_c: Interval::new(last + 1.0, last + n),
                omega: Interval::new(15.0, 20.0),
                alpha: Interval::new(0.1, 1.0),
                phi: Interval::new(0.0, TAU),
                psi: Interval::new(0.0, TAU),
            },
            b_negative: true,
            harmonic: HarmonicOrder::First,
            multistart: 16,
            seed: 0,
            max_iterations: 3000,
            tolerance: 1e-10,
            grid: 32,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let b = &self.bounds;
        b.t_c.validate("t_c")?;
        b.omega.validate("omega")?;
        b.alpha.validate("alpha")?;
        b.phi.validate("phi")?;
        b.psi.validate("psi")?;
        if !(b.omega.lo > 0.0) {
            return Err(invalid("omega bounds must be positive"));
        }
        if !(b.alpha.lo > 0.0 && b.alpha.hi <= 1.0) {
            return Err(invalid(format!("alpha bounds must lie within (0, 1], got [{}, {}]", b.alpha.lo, b.alpha.hi)));
        }
        if self.multistart == 0 {
            return Err(invalid("multistart must be at least 1"));
        }
        if self.max_iterations == 0 {
            return Err(invalid("max_iterations must be at least 1"));
        }
        if !(self.tolerance > 0.0) {
            return Err(invalid("tolerance must be positive"));
        }
        if self.grid < 2 {
            return Err(invalid("preliminary grid needs at least 2 points per axis"));
        }
        Ok(())
    }
}

/// Asymptotic standard error of one parameter from the residual Jacobian.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamError {
    pub name: String,
    pub value: f64,
    pub std_error: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitResult {
    pub params: LpplParams,
    pub sse: f64,
    pub mse: f64,
    pub df: usize,
    pub r_squared: f64,
    pub residuals: Vec<f64>,
    pub converged: bool,
    pub starts_tried: usize,
    /// Nonlinear parameters that ended on an edge of their (non-periodic) box.
    pub at_bounds: Vec<String>,
    pub harmonic: HarmonicOrder,
    /// `sqrt(diag(mse (J^T J)^-1))`; `None` when `J^T J` is singular.
    pub std_errors: Option<Vec<ParamError>>,
}

/// Serializable digest of a [`FitResult`] (everything but the residual vector).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitSummary {
    pub params: LpplParams,
    pub sse: f64,
    pub mse: f64,
    pub df: usize,
    pub r_squared: f64,
    pub converged: bool,
    pub starts_tried: usize,
    pub at_bounds: Vec<String>,
    pub harmonic: HarmonicOrder,
    pub n_observations: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub std_errors: Option<Vec<ParamError>>,
}

impl FitResult {
    pub fn summary(&self) -> FitSummary {
        FitSummary {
            params: self.params,
            sse: self.sse,
            mse: self.mse,
            df: self.df,
            r_squared: self.r_squared,
            converged: self.converged,
            starts_tried: self.starts_tried,
            at_bounds: self.at_bounds.clone(),
            harmonic: self.harmonic,
            n_observations: self.residuals.len(),
            std_errors: self.std_errors.clone(),
        }
    }
}

/// Residual sum of squares of `params` over every observation.
pub fn objective(params: &LpplParams, series: &PriceSeries) -> Result<f64> {
    let mut sse = 0.0;
    for (t, y) in series.iter() {
        let r = y - lppl_eval(params, t)?;
        sse += r * r;
    }
    Ok(sse)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Goodness {
    pub sse: f64,
    pub mse: f64,
    pub df: usize,
    pub r_squared: f64,
}

fn total_sum_of_squares(series: &PriceSeries) -> f64 {
    let n = series.len() as f64;
    let mean = series.log_prices().iter().sum::<f64>() / n;
    series.log_prices().iter().map(|y| (y - mean).powi(2)).sum()
}

/// `mse = sse / df` with `df = n - p` (`p` = 7 or 9) and `r^2 = 1 - sse / sst`.
///
/// A constant series has `sst = 0`; its `r^2` is 1 for a perfect fit and 0 otherwise.
pub fn goodness(series: &PriceSeries, params: &LpplParams) -> Result<Goodness> {
    let p = params.param_count();
    let n = series.len();
    if n <= p {
        return Err(invalid(format!("{n} observations leave no degrees of freedom for {p} parameters")));
    }
    let sse = objective(params, series)?;
    let df = n - p;
    let sst = total_sum_of_squares(series);
    let r_squared = if sst > 0.0 {
        1.0 - sse / sst
    } else if sse == 0.0 {
        1.0
    } else {
        0.0
    };
    Ok(Goodness { sse, mse: sse / df as f64, df, r_squared })
}

/// Search-space layout: `[t_c, alpha, omega, phi(, psi)]`.
struct Problem<'a> {
    series: &'a PriceSeries,
    dims: Vec<Dim>,
    second: bool,
    b_negative: bool,
    sst: f64,
}

impl Problem<'_> {
    fn nonlinear(&self, x: &[f64]) -> Nonlinear {
        Nonlinear { t_c: x[0], alpha: x[1], omega: x[2], phi: x[3], psi: if self.second { Some(x[4]) } else { None } }
    }

    fn linear(&self, x: &[f64]) -> Option<LinearFit> {
        linear::solve(self.series, &self.nonlinear(x)).ok()
    }

    /// Search objective. Candidates with `B >= 0` under the sign constraint score as
    /// the constant-mean model, the limit of the feasible set as `B -> 0`.
    fn value(&self, x: &[f64]) -> f64 {
        match self.linear(x) {
            Some(fit) if self.b_negative && !(fit.b < 0.0) => self.sst,
            Some(fit) => fit.sse,
            None => f64::INFINITY,
        }
    }

    fn params(&self, x: &[f64]) -> Option<LpplParams> {
        let fit = self.linear(x)?;
        if self.b_negative && !(fit.b < 0.0) {
            return None;
        }
        let nl = self.nonlinear(x);
        Some(LpplParams {
            a: fit.a,
            b: fit.b,
            c: fit.c,
            alpha: nl.alpha,
            t_c: nl.t_c,
            phi: nl.phi,
            omega: nl.omega,
            second: nl.psi.map(|psi| SecondHarmonic { d: fit.d.unwrap_or(0.0), psi }),
        })
    }

    fn sample(&self, rng: &mut ChaCha8Rng) -> Vec<f64> {
        self.dims.iter().map(|d| if d.width() > 0.0 { rng.random_range(d.lo..=d.hi) } else { d.lo }).collect()
    }
}

fn is_periodic(iv: &Interval) -> bool {
    iv.width() >= TAU
}

struct SearchOutcome {
    x: Vec<f64>,
    converged: bool,
    starts: usize,
}

/// Runs every start in parallel and keeps the lowest value, ties to the earliest start.
fn multistart(problem: &Problem<'_>, starts: Vec<Vec<f64>>, opts: &SimplexOptions) -> SearchOutcome {
    let f = |x: &[f64]| problem.value(x);
    let outcomes: Vec<_> = starts.par_iter().map(|x0| local_search(&f, x0, &problem.dims, opts, 3)).collect();
    let best = outcomes
        .iter()
        .enumerate()
        .min_by(|(i, a), (j, b)| a.f.total_cmp(&b.f).then(i.cmp(j)))
        .map(|(i, _)| i)
        .unwrap();
    SearchOutcome { x: outcomes[best].x.clone(), converged: outcomes[best].converged, starts: starts.len() }
}

/// Best `(alpha, phi)` on a `grid x grid` lattice with `t_c` and `omega` held fixed.
fn preliminary_grid(problem: &Problem<'_>, t_c: f64, omega: f64, bounds: &Bounds, grid: usize) -> Vec<f64> {
    let alpha_at = |i: usize| bounds.alpha.lo + bounds.alpha.width() * i as f64 / (grid - 1) as f64;
    let phi_at = |j: usize| {
        // a full circle would repeat its first point at the end
        let steps = if is_periodic(&bounds.phi) { grid } else { grid - 1 };
        bounds.phi.lo + bounds.phi.width().min(TAU) * j as f64 / steps as f64
    };
    let mut best = (f64::INFINITY, vec![t_c, alpha_at(0), omega, phi_at(0)]);
    for i in 0..grid {
        for j in 0..grid {
            let x = vec![t_c, alpha_at(i), omega, phi_at(j)];
            let v = problem.value(&x);
            if v < best.0 {
                best = (v, x);
            }
        }
    }
    best.1
}

fn effective_tc_box(series: &PriceSeries, bounds: &Bounds) -> Result<Interval> {
    let last = series.last_time().ok_or(Error::EmptyWindow)?;
    let floor = last + 1e-6 * last.abs().max(1.0);
    let lo = bounds.t_c.lo.max(floor);
    if lo > bounds.t_c.hi {
        return Err(Error::Infeasible(format!(
            "t_c box [{}, {}] does not extend past the last observation at t = {last}",
            bounds.t_c.lo, bounds.t_c.hi
        )));
    }
    Ok(Interval::new(lo, bounds.t_c.hi))
}

fn dims_for(tc: Interval, b: &Bounds, second: bool) -> Vec<Dim> {
    let dim = |iv: Interval, periodic: bool| Dim { lo: iv.lo, hi: iv.hi, periodic };
    let mut dims = vec![dim(tc, false), dim(b.alpha, false), dim(b.omega, false), dim(b.phi, is_periodic(&b.phi))];
    if second {
        dims.push(dim(b.psi, is_periodic(&b.psi)));
    }
    dims
}

/// Fits the LPPL to `series` inside `spec.bounds`.
///
/// With `init`, `t_c` and `omega` are first fixed at the scaling estimate (clamped into
/// the box) and `(alpha, phi)` chosen on a grid; that point is always one of the
/// starts. The remaining starts are drawn uniformly from the box with `spec.seed`.
/// A second-order fit first solves the first-order problem and starts from its optimum,
/// so its residual sum never exceeds the first-order one.
pub fn fit(series: &PriceSeries, spec: &FitSpec, init: Option<&ScalingEstimate>) -> Result<FitResult> {
    spec.validate()?;
    let p = spec.harmonic.param_count();
    if series.len() <= p {
        return Err(Error::SeriesTooShort { needed: p + 1, got: series.len() });
    }
    let tc_box = effective_tc_box(series, &spec.bounds)?;
    let sst = total_sum_of_squares(series);
    let opts = SimplexOptions {
        max_iterations: spec.max_iterations,
        ftol: spec.tolerance,
        ftol_abs: 1e-15 * sst + f64::MIN_POSITIVE,
        xtol: 1e-9,
        initial_step: 0.1,
    };
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);

    let first = Problem {
        series,
        dims: dims_for(tc_box, &spec.bounds, false),
        second: false,
        b_negative: spec.b_negative,
        sst,
    };
    let mut starts = Vec::with_capacity(spec.multistart + 1);
    if let Some(est) = init {
        let t_c = tc_box.clamp(est.t_c);
        let omega = spec.bounds.omega.clamp(est.omega);
        starts.push(preliminary_grid(&first, t_c, omega, &spec.bounds, spec.grid));
    }
    for _ in 0..spec.multistart {
        starts.push(first.sample(&mut rng));
    }
    let mut outcome = multistart(&first, starts, &opts);
    let mut problem = first;

    if spec.harmonic == HarmonicOrder::Second {
        let second = Problem { dims: dims_for(tc_box, &spec.bounds, true), second: true, ..problem };
        // seed from the first-order optimum with the best psi on a coarse circle
        let mut seeded = outcome.x.clone();
        seeded.push(spec.bounds.psi.lo);
        let mut best_v = f64::INFINITY;
        let mut best_psi = spec.bounds.psi.lo;
        for k in 0..8 {
            let psi = spec.bounds.psi.lo + spec.bounds.psi.width().min(TAU) * k as f64 / 8.0;
            seeded[4] = psi;
            let v = second.value(&seeded);
            if v < best_v {
                best_v = v;
                best_psi = psi;
            }
        }
        seeded[4] = best_psi;
        let mut starts = vec![seeded];
        for _ in 0..spec.multistart {
            starts.push(second.sample(&mut rng));
        }
        let first_starts = outcome.starts;
        let next = multistart(&second, starts, &opts);
        outcome = SearchOutcome { starts: next.starts + first_starts, ..next };
        problem = second;
    }

    let params =
        problem.params(&outcome.x).ok_or_else(|| Error::Infeasible("no candidate in the box yields B < 0".into()))?;
    finish(series, &problem, params, &outcome)
}

fn finish(
    series: &PriceSeries,
    problem: &Problem<'_>,
    params: LpplParams,
    outcome: &SearchOutcome,
) -> Result<FitResult> {
    let g = goodness(series, &params)?;
    let residuals = series.iter().map(|(t, y)| lppl_eval(&params, t).map(|v| y - v)).collect::<Result<Vec<_>>>()?;

    let names = ["t_c", "alpha", "omega", "phi", "psi"];
    let at_bounds = problem
        .dims
        .iter()
        .zip(&outcome.x)
        .zip(names)
        .filter(|((d, x), _)| {
            !d.periodic
                && d.width() > 0.0
                && ((*x - d.lo).abs() <= 1e-6 * d.width() || (d.hi - *x).abs() <= 1e-6 * d.width())
        })
        .map(|(_, name)| name.to_string())
        .collect();

    Ok(FitResult {
        std_errors: standard_errors(series, &params, g.mse),
        params: params.normalized(),
        sse: g.sse,
        mse: g.mse,
        df: g.df,
        r_squared: g.r_squared,
        residuals,
        converged: outcome.converged,
        starts_tried: outcome.starts,
        at_bounds,
        harmonic: if params.second.is_some() { HarmonicOrder::Second } else { HarmonicOrder::First },
    })
}

fn param_vector(p: &LpplParams) -> Vec<(&'static str, f64)> {
    let mut v = vec![
        ("a", p.a),
        ("b", p.b),
        ("c", p.c),
        ("alpha", p.alpha),
        ("t_c", p.t_c),
        ("phi", p.phi),
        ("omega", p.omega),
    ];
    if let Some(h) = p.second {
        v.push(("d", h.d));
        v.push(("psi", h.psi));
    }
    v
}

fn with_param(p: &LpplParams, k: usize, value: f64) -> LpplParams {
    let mut q = *p;
    match k {
        0 => q.a = value,
        1 => q.b = value,
        2 => q.c = value,
        3 => q.alpha = value,
        4 => q.t_c = value,
        5 => q.phi = value,
        6 => q.omega = value,
        7 => q.second.as_mut().unwrap().d = value,
        _ => q.second.as_mut().unwrap().psi = value,
    }
    q
}

/// Central-difference Jacobian of the model, then `mse (J^T J)^-1`.
fn standard_errors(series: &PriceSeries, params: &LpplParams, mse: f64) -> Option<Vec<ParamError>> {
    let names = param_vector(params);
    let k = names.len();
    let n = series.len();
    let last = series.last_time()?;
    let mut jac = DMatrix::<f64>::zeros(n, k);
    for (j, (_, value)) in names.iter().enumerate() {
        let mut h = 1e-6 * value.abs().max(1e-3);
        if j == 4 {
            // keep both probes of t_c past the last observation
            h = h.min(0.5 * (params.t_c - last));
        }
        let up = with_param(params, j, value + h);
        let down = with_param(params, j, value - h);
        for (i, t) in series.times().iter().enumerate() {
            let d = (lppl_eval(&up, *t).ok()? - lppl_eval(&down, *t).ok()?) / (2.0 * h);
            jac[(i, j)] = d;
        }
    }
    let info = jac.transpose() * &jac;
    let cov = info.try_inverse()?;
    let normalized = params.normalized();
    let values = param_vector(&normalized);
    Some(
        values
            .iter()
            .enumerate()
            .map(|(j, (name, value))| ParamError {
                name: name.to_string(),
                value: *value,
                std_error: (mse * cov[(j, j)]).max(0.0).sqrt(),
            })
            .collect(),
    )
}
