//! Tail-index estimation and goodness of fit.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::open_uniform;

/// Hill estimate with its asymptotic standard error `H / sqrt(k)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HillEstimate {
    pub value: f64,
    pub std_error: f64,
    pub k: usize,
}

/// `H_{k} = (1/k) sum_{i<=k} ln(X_(i) / X_(k+1))` on values sorted
/// descending.
pub fn hill(sorted_desc: &[f64], k: usize) -> Result<f64> {
    if k == 0 || k + 1 > sorted_desc.len() {
        return Err(Error::OrderStatistic { k: k + 1, len: sorted_desc.len() });
    }
    let pivot = sorted_desc[k];
    if !(pivot > 0.0) {
        return Err(Error::InsufficientData(format!("order statistic {} is {pivot}, not positive", k + 1)));
    }
    let ln_pivot = pivot.ln();
    let sum: f64 = sorted_desc[..k].iter().map(|&x| x.ln() - ln_pivot).sum();
    Ok(sum / k as f64)
}

/// [`hill`] on an unsorted sample, with its standard error.
pub fn hill_estimate<T: Copy + Into<f64>>(sample: &[T], k: usize) -> Result<HillEstimate> {
    let mut xs: Vec<f64> = sample.iter().map(|&x| x.into()).collect();
    xs.sort_unstable_by(|a, b| b.total_cmp(a));
    let value = hill(&xs, k)?;
    Ok(HillEstimate { value, std_error: value / (k as f64).sqrt(), k })
}

/// [`hill_estimate`] for integer degrees.
pub fn hill_degrees(degrees: &[u64], k: usize) -> Result<HillEstimate> {
    let xs: Vec<f64> = degrees.iter().map(|&d| d as f64).collect();
    hill_estimate(&xs, k)
}

/// `Frechet(gamma)`: `P(Z <= z) = exp(-z^-gamma)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FrechetLaw {
    pub gamma: f64,
}

impl FrechetLaw {
    pub fn new(gamma: f64) -> Result<Self> {
        if gamma.is_finite() && gamma > 0.0 {
            Ok(Self { gamma })
        } else {
            Err(Error::param("gamma", format!("must be positive, got {gamma}")))
        }
    }

    pub fn cdf(&self, z: f64) -> f64 {
        frechet_cdf(self.gamma, z)
    }

    pub fn quantile(&self, u: f64) -> f64 {
        frechet_quantile(self.gamma, u)
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        self.quantile(open_uniform(rng).min(1.0 - f64::EPSILON))
    }
}

pub fn frechet_cdf(gamma: f64, z: f64) -> f64 {
    if z <= 0.0 {
        0.0
    } else {
        (-z.powf(-gamma)).exp()
    }
}

/// `(-ln u)^(-1/gamma)` for `u` in (0, 1).
pub fn frechet_quantile(gamma: f64, u: f64) -> f64 {
    (-u.ln()).powf(-1.0 / gamma)
}

/// Two-sided Kolmogorov-Smirnov distance between the empirical law of
/// `sample` and `cdf`.
pub fn ks_distance<F: Fn(f64) -> f64>(sample: &[f64], cdf: F) -> f64 {
    assert!(!sample.is_empty(), "KS distance of an empty sample");
    let mut xs = sample.to_vec();
    xs.sort_unstable_by(f64::total_cmp);
    let m = xs.len() as f64;
    xs.iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = cdf(x);
            let upper = (i + 1) as f64 / m - f;
            let lower = f - i as f64 / m;
            upper.max(lower)
        })
        .fold(0.0, f64::max)
}

/// `k = max(1, min(n - 1, ceil(n^theta)))`.
pub fn intermediate_sequence(n: u64, theta: f64) -> usize {
    // Guard against ceil(10^4^0.5) = 101 from rounding in powf.
    let raw = (n as f64).powf(theta);
    let k = if (raw - raw.round()).abs() < 1e-9 * raw.max(1.0) { raw.round() } else { raw.ceil() };
    (k as u64).min(n.saturating_sub(1)).max(1) as usize
}

/// Least-squares slope of `ln S(v)` on `ln v` over the top fraction `f` of
/// the sample, with `S(v) = #{x >= v} / N` at each distinct value `v`.
/// Estimates `-gamma` for a tail `P(X > v) ~ v^-gamma`.
pub fn tail_slope<T: Copy + Into<f64>>(sample: &[T], fraction: f64) -> Result<f64> {
    if !(fraction > 0.0 && fraction <= 1.0) {
        return Err(Error::param("fraction", format!("must lie in (0, 1], got {fraction}")));
    }
    let mut xs: Vec<f64> = sample.iter().map(|&x| x.into()).collect();
    xs.sort_unstable_by(|a, b| b.total_cmp(a));
    let n = xs.len();
    let top = ((fraction * n as f64).ceil() as usize).min(n);
    let positive = xs[..top].iter().filter(|&&x| x > 0.0).count();
    if positive < 10 {
        return Err(Error::InsufficientData(format!("{positive} positive values in the top {top}, need 10")));
    }
    let mut pts = Vec::new();
    let mut i = 0;
    while i < positive {
        let v = xs[i];
        let mut j = i + 1;
        while j < positive && xs[j] == v {
            j += 1;
        }
        pts.push((v.ln(), (j as f64 / n as f64).ln()));
        i = j;
    }
    if pts.len() < 2 {
        return Err(Error::InsufficientData("no spread among the top values".into()));
    }
    let m = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / m;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / m;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    Ok(sxy / sxx)
}
