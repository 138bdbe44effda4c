//! The log-periodic price law and the hazard rate it is derived from.

use std::f64::consts::TAU;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

/// Amplitude and phase of the `2 omega` Fourier term.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SecondHarmonic {
    pub d: f64,
    pub psi: f64,
}

/// Parameters of the LPPL price law
/// `A + B u^alpha [1 + C cos(omega ln u + phi) + D cos(2 omega ln u + psi)]`, `u = t_c - t`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LpplParams {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub alpha: f64,
    pub t_c: f64,
    pub phi: f64,
    pub omega: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub second: Option<SecondHarmonic>,
}

impl LpplParams {
    /// First-order parameters; fails on `omega <= 0` or `alpha <= 0`.
    #[allow(clippy::too_many_arguments)]
    pub fn new(a: f64, b: f64, c: f64, alpha: f64, t_c: f64, phi: f64, omega: f64) -> Result<Self> {
        let p = Self { a, b, c, alpha, t_c, phi, omega, second: None };
        p.validate()?;
        Ok(p)
    }

    pub fn with_second_harmonic(mut self, d: f64, psi: f64) -> Self {
        self.second = Some(SecondHarmonic { d, psi });
        self
    }

    pub fn validate(&self) -> Result<()> {
        let finite = [self.a, self.b, self.c, self.alpha, self.t_c, self.phi, self.omega].iter().all(|v| v.is_finite());
        if !finite {
            return Err(invalid("LPPL parameters must be finite"));
        }
        if let Some(h) = self.second {
            if !h.d.is_finite() || !h.psi.is_finite() {
                return Err(invalid("second-harmonic parameters must be finite"));
            }
        }
        if self.omega <= 0.0 {
            return Err(invalid(format!("omega must be positive, got {}", self.omega)));
        }
        if self.alpha <= 0.0 {
            return Err(invalid(format!("alpha must be positive, got {}", self.alpha)));
        }
        Ok(())
    }

    /// Number of free parameters: 7, or 9 with the second harmonic.
    pub fn param_count(&self) -> usize {
        if self.second.is_some() {
            9
        } else {
            7
        }
    }

    /// Copy with every phase reduced to `[0, 2 pi)`.
    pub fn normalized(&self) -> Self {
        let mut p = *self;
        p.phi = normalize_phase(p.phi);
        if let Some(h) = p.second.as_mut() {
            h.psi = normalize_phase(h.psi);
        }
        p
    }
}

/// Reduces an angle to `[0, 2 pi)`.
pub fn normalize_phase(x: f64) -> f64 {
    let r = x.rem_euclid(TAU);
    // rem_euclid can round up to exactly TAU for tiny negative inputs
    if r >= TAU {
        0.0
    } else {
        r
    }
}

/// Predicted log-price at `t`. Requires `t < t_c`.
pub fn lppl_eval(params: &LpplParams, t: f64) -> Result<f64> {
    let u = params.t_c - t;
    if !(u > 0.0) {
        return Err(Error::Domain(format!("LPPL evaluated at t = {t}, not before t_c = {}", params.t_c)));
    }
    Ok(lppl_at_distance(params, u))
}

/// LPPL at distance `u = t_c - t > 0` from the critical time; no domain check.
pub(crate) fn lppl_at_distance(params: &LpplParams, u: f64) -> f64 {
    let log_u = u.ln();
    let mut osc = 1.0 + params.c * (params.omega * log_u + params.phi).cos();
    if let Some(h) = params.second {
        osc += h.d * (2.0 * params.omega * log_u + h.psi).cos();
    }
    params.a + params.b * u.powf(params.alpha) * osc
}

/// Hazard-rate parameters of the crash jump process plus the crash size `kappa`.
///
/// `h(t) = (t_c - t)^-beta [B0 + B1 cos(omega ln(t_c - t) + psi')]`
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CrashProcessParams {
    pub b0: f64,
    pub b1: f64,
    pub beta: f64,
    pub t_c: f64,
    pub omega: f64,
    pub psi_prime: f64,
    /// Fractional crash size; simulations additionally require `kappa < 1`.
    pub kappa: f64,
}

impl CrashProcessParams {
    #[allow(clippy::too_many_arguments)]
    pub fn new(b0: f64, b1: f64, beta: f64, t_c: f64, omega: f64, psi_prime: f64, kappa: f64) -> Result<Self> {
        let p = Self { b0, b1, beta, t_c, omega, psi_prime, kappa };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        let all = [self.b0, self.b1, self.beta, self.t_c, self.omega, self.psi_prime, self.kappa];
        if !all.iter().all(|v| v.is_finite()) {
            return Err(invalid("crash-process parameters must be finite"));
        }
        // B0 > |B1| keeps the hazard strictly positive
        if !(self.b0 > self.b1.abs()) {
            return Err(invalid(format!("hazard requires B0 > |B1|, got B0 = {}, B1 = {}", self.b0, self.b1)));
        }
        if !(self.beta > 0.0 && self.beta < 1.0) {
            return Err(invalid(format!("beta must lie in (0, 1), got {}", self.beta)));
        }
        if !(0.0..=1.0).contains(&self.kappa) {
            return Err(invalid(format!("kappa must lie in [0, 1], got {}", self.kappa)));
        }
        if self.omega <= 0.0 {
            return Err(invalid(format!("omega must be positive, got {}", self.omega)));
        }
        Ok(())
    }
}

/// Crash hazard rate at `t < t_c`.
pub fn hazard_eval(params: &CrashProcessParams, t: f64) -> Result<f64> {
    let u = params.t_c - t;
    if !(u > 0.0) {
        return Err(Error::Domain(format!("hazard evaluated at t = {t}, not before t_c = {}", params.t_c)));
    }
    Ok(hazard_at_distance(params, u))
}

pub(crate) fn hazard_at_distance(params: &CrashProcessParams, u: f64) -> f64 {
    u.powf(-params.beta) * (params.b0 + params.b1 * (params.omega * u.ln() + params.psi_prime).cos())
}

/// `integral_{t0}^{t} h` by the composite midpoint rule on `steps` equal panels.
pub fn hazard_integral(params: &CrashProcessParams, t0: f64, t: f64, steps: usize) -> Result<f64> {
    if steps == 0 {
        return Err(invalid("quadrature needs at least one step"));
    }
    if !(t0 <= t) {
        return Err(Error::Domain(format!("integration bounds out of order: t0 = {t0}, t = {t}")));
    }
    if !(t < params.t_c) {
        return Err(Error::Domain(format!("integration endpoint t = {t} must precede t_c = {}", params.t_c)));
    }
    let h = (t - t0) / steps as f64;
    let sum: f64 = (0..steps).map(|k| hazard_at_distance(params, params.t_c - (t0 + (k as f64 + 0.5) * h))).sum();
    Ok(sum * h)
}

/// No-crash log-price increment `log p(t) - log p(t0) = kappa * integral_{t0}^{t} h`.
pub fn integrated_log_price(params: &CrashProcessParams, t0: f64, t: f64, steps: usize) -> Result<f64> {
    if !(t0 < t) {
        return Err(Error::Domain(format!("need t0 < t, got t0 = {t0}, t = {t}")));
    }
    Ok(params.kappa * hazard_integral(params, t0, t, steps)?)
}

/// LPPL parameters whose curve equals `A + kappa * integral_{t0}^{t} h`.
///
/// With `alpha = 1 - beta` the oscillatory hazard term integrates in closed form to
/// `u^alpha / sqrt(alpha^2 + omega^2) * cos(omega ln u + psi' - atan2(omega, alpha))`,
/// so the mapping is exact, phase shift included. The returned `A` absorbs the
/// antiderivative evaluated at `t0`.
pub fn lppl_from_hazard(params: &CrashProcessParams, a: f64, t0: f64) -> Result<LpplParams> {
    params.validate()?;
    let u0 = params.t_c - t0;
    if !(u0 > 0.0) {
        return Err(Error::Domain(format!("t0 = {t0} must precede t_c = {}", params.t_c)));
    }
    let alpha = 1.0 - params.beta;
    let omega = params.omega;
    let norm = alpha.hypot(omega);
    let shift = omega.atan2(alpha);
    let phi = params.psi_prime - shift;

    let antiderivative = |u: f64| u.powf(alpha) * (params.b0 / alpha + params.b1 / norm * (omega * u.ln() + phi).cos());
    let out = LpplParams {
        a: a + params.kappa * antiderivative(u0),
        b: -params.kappa * params.b0 / alpha,
        c: params.b1 * alpha / (params.b0 * norm),
        alpha,
        t_c: params.t_c,
        phi: normalize_phase(phi),
        omega,
        second: None,
    };
    out.validate()?;
    Ok(out)
}
