//! Rescaled degree point processes and their limit measure.
//!
//! `D_n` puts unit mass at `D_x / (xi q(n))` for every window vertex `x`;
//! `D_{k,n}` puts mass `1/k` at `D_x / (xi q(n/k))`. Both are evaluated on
//! half-open intervals `(a, b]` with `0 < a <= b <= inf`. The limit of `D_n`
//! is a Poisson process with intensity `nu_gamma((a, b]) = a^-gamma -
//! b^-gamma`; the limit of `D_{k_n,n}` is `nu_gamma` itself.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::models::DegreeSample;

/// Level at which the quantile in the denominator is taken.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Level {
    /// `q(n)`, unit masses: the process `D_n`.
    N,
    /// `q(n/k)`, masses `1/k`: the process `D_{k,n}`.
    NOverK(u64),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RescaledDegrees {
    /// Descending.
    pub values: Vec<f64>,
    /// `xi * q(level)`.
    pub scale: f64,
    pub mass: f64,
    /// Quantile level `n` or `n/k`.
    pub level: f64,
}

fn check_interval(a: f64, b: f64) -> Result<()> {
    if !(a > 0.0) {
        return Err(Error::param("a", format!("left endpoint must be positive, got {a}")));
    }
    if !(b >= a) {
        return Err(Error::param("b", format!("need a <= b, got ({a}, {b}]")));
    }
    Ok(())
}

impl RescaledDegrees {
    /// Divides `degrees` by `scale` and sorts descending.
    pub fn from_degrees(degrees: &[u64], scale: f64, mass: f64, level: f64) -> Self {
        let mut values: Vec<f64> = degrees.iter().map(|&d| d as f64 / scale).collect();
        values.sort_unstable_by(|a, b| b.total_cmp(a));
        Self { values, scale, mass, level }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn max(&self) -> Option<f64> {
        self.values.first().copied()
    }

    /// Number of values strictly above `a`.
    fn above(&self, a: f64) -> usize {
        self.values.partition_point(|&v| v > a)
    }

    /// `mass * #{v : a < v <= b}`; `b` may be infinite.
    pub fn count_interval(&self, a: f64, b: f64) -> Result<f64> {
        check_interval(a, b)?;
        let n = self.above(a) - self.above(b);
        Ok(self.mass * n as f64)
    }
}

/// Rescales the window degrees of `sample` at level `n` or `n/k`.
pub fn rescale(sample: &DegreeSample, level: Level) -> Result<RescaledDegrees> {
    let s = sample.scaling()?;
    let n = sample.config.n;
    let (t, mass) = match level {
        Level::N => (n as f64, 1.0),
        Level::NOverK(k) => {
            if k == 0 || k >= n {
                return Err(Error::param("k", format!("need 1 <= k < n = {n}, got {k}")));
            }
            (n as f64 / k as f64, 1.0 / k as f64)
        }
    };
    let q = sample.config.weight.quantile_q(s.p, t)?;
    Ok(RescaledDegrees::from_degrees(&sample.degrees, s.xi * q, mass, t))
}

/// The measure `nu_gamma` on `(0, inf]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LimitMeasure {
    pub gamma: f64,
}

impl LimitMeasure {
    pub fn new(gamma: f64) -> Result<Self> {
        if gamma.is_finite() && gamma > 0.0 {
            Ok(Self { gamma })
        } else {
            Err(Error::param("gamma", format!("must be positive, got {gamma}")))
        }
    }

    /// `nu_gamma((a, b]) = a^-gamma - b^-gamma`.
    pub fn measure(&self, a: f64, b: f64) -> Result<f64> {
        check_interval(a, b)?;
        let tail_b = if b.is_infinite() { 0.0 } else { b.powf(-self.gamma) };
        Ok((a.powf(-self.gamma) - tail_b).max(0.0))
    }
}

/// `nu_gamma((a, b])`.
pub fn nu_measure(gamma: f64, a: f64, b: f64) -> Result<f64> {
    LimitMeasure::new(gamma)?.measure(a, b)
}

/// Indices sorted by value descending, ties by index ascending.
pub fn ranking<T: PartialOrd + Copy>(values: &[T]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..values.len()).collect();
    idx.sort_by(|&i, &j| values[j].partial_cmp(&values[i]).unwrap_or(std::cmp::Ordering::Equal).then(i.cmp(&j)));
    idx
}

/// Index of the `k`-th largest value (`k >= 1`), ties by index.
pub fn order_statistic_index<T: PartialOrd + Copy>(values: &[T], k: usize) -> Result<usize> {
    if k == 0 || k > values.len() {
        return Err(Error::OrderStatistic { k, len: values.len() });
    }
    Ok(ranking(values)[k - 1])
}

/// `k`-th largest degree.
pub fn order_statistic(degrees: &[u64], k: usize) -> Result<u64> {
    if k == 0 || k > degrees.len() {
        return Err(Error::OrderStatistic { k, len: degrees.len() });
    }
    let mut sorted = degrees.to_vec();
    let (_, kth, _) = sorted.select_nth_unstable_by(k - 1, |a, b| b.cmp(a));
    Ok(*kth)
}

/// The vertex with the `k`-th largest weight has the `k`-th largest degree.
/// False when fewer than `k` vertices exist.
pub fn kth_weight_has_kth_degree(weights: &[f64], degrees: &[u64], k: usize) -> bool {
    match (order_statistic_index(weights, k), order_statistic_index(degrees, k)) {
        (Ok(a), Ok(b)) => a == b,
        _ => false,
    }
}
