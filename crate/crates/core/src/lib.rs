//! Log-periodic power-law (LPPL) bubble modelling.
//!
//! The crate fits `log p(t) = A + B (t_c - t)^alpha [1 + C cos(omega ln(t_c - t) + phi)]`
//! (optionally with a second harmonic) to log-price series, estimates the critical
//! time `t_c` from the spacing of successive minima, and generates synthetic data from
//! the hazard-rate crash process and the imitation lattice that motivate the model.
//!
//! Time is measured in trading-day index units throughout.

// `!(x > 0.0)` is used on purpose so that NaN fails the check.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod data_io;
pub mod error;
pub mod fitting;
pub mod model;
pub mod scaling;
pub mod simulation;

pub use data_io::PriceSeries;
pub use error::{Error, Result};
pub use fitting::{fit, FitResult, FitSpec, HarmonicOrder};
pub use model::{CrashProcessParams, LpplParams, SecondHarmonic};
pub use scaling::{MinimaSet, ScalingEstimate};
