//! Expected number of edges a window vertex loses to the finite buffer.
//!
//! A vertex of weight `w` and a vertex at distance `r` with an independent
//! weight `W'` are linked with probability
//! `g(r) = E[1 - exp(-c W')]`, `c = lambda w r^-alpha`. Integrating by parts,
//!
//! ```text
//! g = (1 - e^{-c l}) + e^{-c l} int_0^inf e^{-s} P(W' > l + s / c) ds
//! ```
//!
//! with `l` the lower end of the weight law. Every vertex outside the
//! simulated box is at Chebyshev distance at least `b + 1` from every
//! window point (`b = floor(B)`), so on the lattice the loss is at most
//! `sum_{j > b} ((2j+1)^d - (2j-1)^d) g(j)`. In the continuum the missing
//! points lie beyond Euclidean distance `B` and the loss is at most
//! `int_B^inf d v_d r^(d-1) g(r) dr`.

use super::{unit_ball_volume, ModelConfig, ModelKind};
use crate::error::{Error, Result};
use crate::numeric::integrate;
use crate::weights::WeightDistribution;

/// Largest acceptable expected number of missed edges.
pub const TRUNCATION_GATE: f64 = 0.05;
/// Weight quantile at which the gate is evaluated.
pub const TRUNCATION_GATE_LEVEL: f64 = 0.999;

/// Terms of the lattice sum taken exactly before the integral tail.
const DIRECT_TERMS: u64 = 2_000;
const REL_TOL: f64 = 1e-9;
const MAX_DOUBLINGS: u32 = 40;

/// `E[1 - exp(-c W)]`.
fn miss_probability(dist: &WeightDistribution, c: f64) -> f64 {
    if c <= 0.0 {
        return 0.0;
    }
    let l = dist.lower();
    let head = -(-c * l).exp_m1();
    let f = |s: f64| (-s).exp() * dist.survival(l + s / c);
    // Break points at the scale where the survival function starts to fall.
    let mut tail = 0.0;
    let mut a = 0.0;
    let mut b = (c * l).min(50.0);
    loop {
        tail += integrate(f, a, b, 0.0, REL_TOL, 500).value;
        if b >= 50.0 {
            break;
        }
        a = b;
        b = (b * 10.0).min(50.0);
    }
    head + (-c * l).exp() * tail
}

/// Upper bound on the expected number of edges between a window vertex of
/// weight `w` and the vertices beyond the buffer.
pub fn estimate_truncation_bias(config: &ModelConfig, w: f64) -> Result<f64> {
    if !matches!(config.kind, ModelKind::Lattice | ModelKind::Continuum) {
        return Err(Error::NoTruncation);
    }
    if !(w > 0.0) {
        return Ok(0.0);
    }
    let d = config.dim as i32;
    let alpha = config.alpha;
    let scale = config.lambda * w;
    let g = |r: f64| miss_probability(&config.weight, scale * r.powf(-alpha));
    let buffer = config.buffer_width();
    let bias = match config.kind {
        ModelKind::Lattice => {
            let shell = |r: f64| (2.0 * r + 1.0).powi(d) - (2.0 * r - 1.0).powi(d);
            let first = buffer.floor() as u64 + 1;
            let direct: f64 = (first..first + DIRECT_TERMS).map(|j| shell(j as f64) * g(j as f64)).sum();
            // Midpoint rule for the remaining, slowly varying terms.
            let from = (first + DIRECT_TERMS) as f64 - 0.5;
            direct + tail_integral(|r| shell(r) * g(r), from)
        }
        _ => {
            let surface = f64::from(d) * unit_ball_volume(config.dim);
            let density = |r: f64| surface * r.powi(d - 1) * g(r);
            let near = if buffer > 0.0 {
                integrate(density, buffer, buffer + 1.0, 0.0, REL_TOL, 200).value
            } else {
                integrate(density, 0.0, 1.0, 0.0, REL_TOL, 200).value
            };
            near + tail_integral(density, buffer + 1.0)
        }
    };
    Ok(bias)
}

/// `int_from^inf f(r) dr` through `r = from / (1 - u)`.
fn tail_integral<F: Fn(f64) -> f64>(f: F, from: f64) -> f64 {
    let h = |u: f64| {
        let one_minus = 1.0 - u;
        f(from / one_minus) * from / (one_minus * one_minus)
    };
    integrate(h, 0.0, 1.0, 0.0, REL_TOL, 2_000).value
}

/// Smallest buffer of the form `B0 * 2^j` whose bias at the
/// [`TRUNCATION_GATE_LEVEL`] weight quantile is at most `gate`, where `B0`
/// is the configured buffer.
pub fn auto_buffer(config: &ModelConfig, gate: f64) -> Result<f64> {
    let w = config.weight.weight_quantile(TRUNCATION_GATE_LEVEL)?;
    let mut cfg = config.clone();
    let mut buffer = config.buffer_width().max(1.0);
    let mut bias = f64::INFINITY;
    for _ in 0..=MAX_DOUBLINGS {
        cfg.buffer = Some(buffer);
        bias = estimate_truncation_bias(&cfg, w)?;
        if bias <= gate {
            return Ok(buffer);
        }
        buffer *= 2.0;
    }
    Err(Error::TruncationBias { bias, gate })
}
