//! Local-minimum detection and the geometric scaling estimators.
//!
//! Successive minima `t_1 < t_2 < t_3` of a log-periodic signal shrink geometrically
//! towards `t_c`. Their spacing ratio gives `lambda`, the accumulation point of the
//! geometric series gives `t_c`, and `omega = 2 pi / ln lambda`.

use std::f64::consts::TAU;

use serde::{Deserialize, Serialize};

use crate::data_io::PriceSeries;
use crate::error::{invalid, Error, Result};

/// Ordered local minima of a series.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MinimaSet {
    /// Positions in the source series.
    pub indices: Vec<usize>,
    /// Series times at those positions.
    pub times: Vec<f64>,
    pub window: usize,
    pub smoothing: usize,
}

impl MinimaSet {
    /// Minima given directly as times (positions default to rounded times).
    pub fn from_times(times: Vec<f64>) -> Result<Self> {
        if times.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(invalid("minima times must be strictly increasing"));
        }
        let indices = times.iter().map(|t| t.round().max(0.0) as usize).collect();
        Ok(Self { indices, times, window: 0, smoothing: 1 })
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScalingEstimate {
    pub lambda: f64,
    pub t_c: f64,
    pub omega: f64,
    /// Last triple that entered the estimate.
    pub source_triple: [f64; 3],
    pub triples_used: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Aggregation {
    #[default]
    LastTriple,
    MeanOverTriples,
}

/// Centered moving average of width `width`, truncated at the ends.
pub fn moving_average(values: &[f64], width: usize) -> Vec<f64> {
    if width <= 1 {
        return values.to_vec();
    }
    let left = (width - 1) / 2;
    let right = width - 1 - left;
    let mut prefix = Vec::with_capacity(values.len() + 1);
    prefix.push(0.0);
    for v in values {
        prefix.push(prefix.last().unwrap() + v);
    }
    (0..values.len())
        .map(|i| {
            let lo = i.saturating_sub(left);
            let hi = (i + right).min(values.len() - 1);
            (prefix[hi + 1] - prefix[lo]) / (hi + 1 - lo) as f64
        })
        .collect()
}

/// Interior positions whose (smoothed) log-price is the minimum of `[i - window, i + window]`.
///
/// A candidate must be strictly below every earlier value in its window and no
/// greater than every later one, so of several tied values the earliest wins.
pub fn detect_minima(series: &PriceSeries, window: usize, smoothing: usize) -> Result<MinimaSet> {
    if window == 0 {
        return Err(invalid("minima window must be at least 1"));
    }
    if smoothing == 0 {
        return Err(invalid("smoothing width must be at least 1 (1 = none)"));
    }
    let n = series.len();
    if n <= 2 * window + 1 {
        return Err(Error::SeriesTooShort { needed: 2 * window + 2, got: n });
    }
    let y = moving_average(series.log_prices(), smoothing);
    let indices: Vec<usize> = (window..n - window)
        .filter(|&i| {
            let v = y[i];
            y[i - window..i].iter().all(|&w| v < w) && y[i + 1..=i + window].iter().all(|&w| v <= w)
        })
        .collect();
    let times = indices.iter().map(|&i| series.times()[i]).collect();
    Ok(MinimaSet { indices, times, window, smoothing })
}

fn check_order(t1: f64, t2: f64, t3: f64) -> Result<()> {
    if !(t1 < t2 && t2 < t3) {
        return Err(invalid(format!("minima must satisfy t1 < t2 < t3, got ({t1}, {t2}, {t3})")));
    }
    Ok(())
}

/// Spacing ratio `(t2 - t1) / (t3 - t2)`.
pub fn estimate_lambda(t1: f64, t2: f64, t3: f64) -> Result<f64> {
    check_order(t1, t2, t3)?;
    Ok((t2 - t1) / (t3 - t2))
}

/// Accumulation point of the geometric series through `t1, t2, t3`.
///
/// Equal to `(t2^2 - t3 t1) / (2 t2 - t1 - t3)`, evaluated as `t2 + d1 d2 / (d1 - d2)`
/// which does not lose digits when the times are large compared with their spacing.
pub fn estimate_tc(t1: f64, t2: f64, t3: f64) -> Result<f64> {
    check_order(t1, t2, t3)?;
    let d1 = t2 - t1;
    let d2 = t3 - t2;
    if d1 == d2 {
        return Err(invalid("degenerate triple: equal spacings put t_c at infinity"));
    }
    if d1 < d2 {
        return Err(invalid(format!("spacings grow (lambda = {} <= 1); no accumulation point ahead", d1 / d2)));
    }
    Ok(t2 + d1 * d2 / (d1 - d2))
}

pub fn omega_from_lambda(lambda: f64) -> Result<f64> {
    if !(lambda > 1.0) || !lambda.is_finite() {
        return Err(invalid(format!("lambda must exceed 1, got {lambda}")));
    }
    Ok(TAU / lambda.ln())
}

/// `lambda` and `t_c` for one consecutive triple; `t_c` is `None` when the spacings do not shrink.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TripleEstimate {
    pub triple: [f64; 3],
    pub lambda: f64,
    pub t_c: Option<f64>,
}

pub fn consecutive_triples(minima: &MinimaSet) -> Vec<TripleEstimate> {
    minima
        .times
        .windows(3)
        .map(|w| TripleEstimate {
            triple: [w[0], w[1], w[2]],
            lambda: (w[1] - w[0]) / (w[2] - w[1]),
            t_c: estimate_tc(w[0], w[1], w[2]).ok(),
        })
        .collect()
}

/// Scaling estimate from three or more minima.
///
/// `LastTriple` uses the three latest minima. `MeanOverTriples` averages `lambda` and
/// `t_c` arithmetically over every consecutive triple whose spacings shrink.
pub fn scaling_from_minima(minima: &MinimaSet, aggregation: Aggregation) -> Result<ScalingEstimate> {
    if minima.len() < 3 {
        return Err(Error::SeriesTooShort { needed: 3, got: minima.len() });
    }
    let triples = consecutive_triples(minima);
    match aggregation {
        Aggregation::LastTriple => {
            let last = triples.last().unwrap();
            let [t1, t2, t3] = last.triple;
            let lambda = estimate_lambda(t1, t2, t3)?;
            let t_c = estimate_tc(t1, t2, t3)?;
            Ok(ScalingEstimate {
                lambda,
                t_c,
                omega: omega_from_lambda(lambda)?,
                source_triple: last.triple,
                triples_used: 1,
            })
        }
        Aggregation::MeanOverTriples => {
            let usable: Vec<_> = triples.iter().filter(|e| e.t_c.is_some()).collect();
            if usable.is_empty() {
                return Err(invalid("no consecutive triple of minima has shrinking spacings"));
            }
            let k = usable.len() as f64;
            let lambda = usable.iter().map(|e| e.lambda).sum::<f64>() / k;
            let t_c = usable.iter().map(|e| e.t_c.unwrap()).sum::<f64>() / k;
            Ok(ScalingEstimate {
                lambda,
                t_c,
                omega: omega_from_lambda(lambda)?,
                source_triple: usable.last().unwrap().triple,
                triples_used: usable.len(),
            })
        }
    }
}
