//! Closed-form elimination of the linear LPPL parameters.
//!
//! For fixed `(t_c, alpha, omega, phi[, psi])` the model is linear in
//! `(A, B, B*C[, B*D])` with regressors `1`, `f = u^alpha`,
//! `g1 = u^alpha cos(omega ln u + phi)` and `g2 = u^alpha cos(2 omega ln u + psi)`.
//! The normal equations are solved on centred, unit-scaled columns, which keeps the
//! small system well conditioned even though `1` and `f` are nearly collinear.

use nalgebra::{DMatrix, DVector};

use crate::data_io::PriceSeries;
use crate::error::{Error, Result};

/// `|B|` below which `C` (and `D`) are unidentifiable and reported as 0.
pub const B_THRESHOLD: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinearFit {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    /// Second-harmonic amplitude; `None` for first-order fits.
    pub d: Option<f64>,
    pub sse: f64,
}

/// The nonlinear coordinates the linear subproblem is conditioned on.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct Nonlinear {
    pub t_c: f64,
    pub alpha: f64,
    pub omega: f64,
    pub phi: f64,
    pub psi: Option<f64>,
}

/// Optimal `(A, B, C)` and the residual sum of squares for fixed nonlinear parameters.
pub fn reduce_linear(series: &PriceSeries, t_c: f64, alpha: f64, omega: f64, phi: f64) -> Result<LinearFit> {
    solve(series, &Nonlinear { t_c, alpha, omega, phi, psi: None })
}

/// Same as [`reduce_linear`] with the second harmonic's amplitude `D` also eliminated.
pub fn reduce_linear_second(
    series: &PriceSeries,
    t_c: f64,
    alpha: f64,
    omega: f64,
    phi: f64,
    psi: f64,
) -> Result<LinearFit> {
    solve(series, &Nonlinear { t_c, alpha, omega, phi, psi: Some(psi) })
}

pub(crate) fn solve(series: &PriceSeries, nl: &Nonlinear) -> Result<LinearFit> {
    let n = series.len();
    let k = if nl.psi.is_some() { 3 } else { 2 };
    if n < k + 2 {
        return Err(Error::SeriesTooShort { needed: k + 2, got: n });
    }

    // columns: f, g1[, g2]
    let mut cols = DMatrix::<f64>::zeros(n, k);
    for (i, t) in series.times().iter().enumerate() {
        let u = nl.t_c - t;
        if !(u > 0.0) {
            return Err(Error::Domain(format!("observation at t = {t} is not before t_c = {}", nl.t_c)));
        }
        let log_u = u.ln();
        let f = u.powf(nl.alpha);
        cols[(i, 0)] = f;
        cols[(i, 1)] = f * (nl.omega * log_u + nl.phi).cos();
        if let Some(psi) = nl.psi {
            cols[(i, 2)] = f * (2.0 * nl.omega * log_u + psi).cos();
        }
    }
    let y = DVector::from_column_slice(series.log_prices());
    let y_mean = y.mean();
    let means: Vec<f64> = (0..k).map(|j| cols.column(j).mean()).collect();
    let mut centred = cols.clone();
    for (j, m) in means.iter().enumerate() {
        centred.column_mut(j).add_scalar_mut(-m);
    }
    let yc = y.add_scalar(-y_mean);

    let gram = centred.transpose() * &centred;
    let rhs = centred.transpose() * &yc;
    let scale: Vec<f64> = (0..k).map(|j| gram[(j, j)].sqrt()).collect();
    if scale.iter().any(|s| !(*s > 0.0) || !s.is_finite()) {
        return Err(Error::DegenerateDesign("a regressor is constant over the window".into()));
    }
    let scaled = DMatrix::from_fn(k, k, |i, j| gram[(i, j)] / (scale[i] * scale[j]));
    let scaled_rhs = DVector::from_fn(k, |i, _| rhs[i] / scale[i]);
    let chol = scaled.cholesky().ok_or_else(|| Error::DegenerateDesign("regressors are linearly dependent".into()))?;
    let diag_min = (0..k).map(|i| chol.l_dirty()[(i, i)]).fold(f64::INFINITY, f64::min);
    if diag_min < 1e-7 {
        return Err(Error::DegenerateDesign("regressors are numerically collinear".into()));
    }
    let z = chol.solve(&scaled_rhs);
    let coef: Vec<f64> = (0..k).map(|j| z[j] / scale[j]).collect();

    let b = coef[0];
    let a = y_mean - coef.iter().zip(&means).map(|(c, m)| c * m).sum::<f64>();
    let mut sse = 0.0;
    for i in 0..n {
        let fitted = a + (0..k).map(|j| coef[j] * cols[(i, j)]).sum::<f64>();
        let r = y[i] - fitted;
        sse += r * r;
    }
    let ratio = |e: f64| if b.abs() < B_THRESHOLD { 0.0 } else { e / b };
    Ok(LinearFit { a, b, c: ratio(coef[1]), d: nl.psi.map(|_| ratio(coef[2])), sse })
}
