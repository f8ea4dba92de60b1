//! Joint construction of model IV (`G1`), model V (`G2`) and the Poissonised
//! Chung-Lu graph (`G3`) on shared weights.
//!
//! For a pair with `p' = W_x W_y / L` and `p = min(p', 1)` one uniform `U`
//! drives all three edge counts:
//!
//! - `E2 = 1{U > 1 - p}`;
//! - `E3 = F^-1(U)` for `F` the `Poisson(p)` distribution function;
//! - `E1 = E3` when `p' = p`, otherwise the `Poisson(p')` inverse at `U`.
//!
//! `P(Poisson(p) = 0) = e^-p >= 1 - p`, so all three counts vanish unless
//! `U > 1 - p`, and that event is found by geometric jumps exactly as in the
//! fast Chung-Lu sampler. The pair `(E2, E3)` is a maximal coupling.

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::rng_from_seed;
use crate::error::Result;
use crate::numeric::{open_uniform, poisson_inverse_cdf, skip_by_probability};
use crate::weights::WeightDistribution;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoupledTriple {
    pub weights: Vec<f64>,
    pub total_weight: f64,
    pub degrees_nr: Vec<u64>,
    pub degrees_cl: Vec<u64>,
    pub degrees_poisson_cl: Vec<u64>,
    /// `max W^2 <= L`, the event on which `G1 = G3`.
    pub a_n: bool,
    /// Some pair has `E1 != E3`.
    pub nr_differs: bool,
    /// `sum over ordered pairs (x, y) of |E2 - E3|`; a loop is counted once.
    pub d_e: u64,
}

/// The coupled pair `(I, J)` with `I ~ Bernoulli(q)`, `J ~ Poisson(q)` at
/// the uniform `u`.
pub fn bernoulli_poisson_coupling(q: f64, u: f64) -> (u64, u64) {
    let i = u64::from(u > 1.0 - q);
    (i, poisson_inverse_cdf(q, u))
}

/// `E|I - J|` of [`bernoulli_poisson_coupling`]: `2 (q - 1 + e^-q)`.
pub fn coupling_mean_mismatch(q: f64) -> f64 {
    2.0 * (q + (-q).exp_m1())
}

/// One draw of the coupled triple on `n` vertices.
pub fn generate_coupled(n: usize, dist: &WeightDistribution, seed: u64) -> Result<CoupledTriple> {
    let mut rng = rng_from_seed(seed);
    let weights: Vec<f64> = (0..n).map(|_| dist.sample(&mut rng)).collect();
    Ok(couple_on_weights(weights, &mut rng))
}

/// The coupled triple on fixed weights.
pub fn couple_on_weights<R: Rng + ?Sized>(weights: Vec<f64>, rng: &mut R) -> CoupledTriple {
    let n = weights.len();
    let total: f64 = weights.iter().sum();
    let max_w = weights.iter().copied().fold(0.0, f64::max);
    let mut triple = CoupledTriple {
        total_weight: total,
        degrees_nr: vec![0; n],
        degrees_cl: vec![0; n],
        degrees_poisson_cl: vec![0; n],
        a_n: max_w * max_w <= total,
        nr_differs: false,
        d_e: 0,
        weights: Vec::new(),
    };
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| weights[b].total_cmp(&weights[a]));
    for i in 0..n {
        let x = order[i];
        let wx = weights[x];
        let mut j = i;
        let mut bound = (wx * weights[order[j]] / total).min(1.0);
        while j < n && bound > 0.0 {
            if bound < 1.0 {
                let skip = skip_by_probability(rng, bound);
                j = j.saturating_add(usize::try_from(skip).unwrap_or(usize::MAX));
                if j >= n {
                    break;
                }
            }
            let y = order[j];
            let raw = wx * weights[y] / total;
            let p = raw.min(1.0);
            if p >= bound || rng.gen::<f64>() * bound < p {
                // Conditionally on U > 1 - p the uniform is 1 - p V.
                let u = 1.0 - p * open_uniform(rng);
                let e3 = poisson_inverse_cdf(p, u);
                let e1 = if raw <= 1.0 { e3 } else { poisson_inverse_cdf(raw, u) };
                triple.record(x, y, e1, 1, e3);
            }
            bound = p;
            j += 1;
        }
    }
    triple.weights = weights;
    triple
}

impl CoupledTriple {
    fn record(&mut self, x: usize, y: usize, e1: u64, e2: u64, e3: u64) {
        let mismatch = e2.abs_diff(e3);
        if x == y {
            self.d_e += mismatch;
            self.degrees_nr[x] += e1;
            self.degrees_cl[x] += e2;
            self.degrees_poisson_cl[x] += e3;
        } else {
            self.d_e += 2 * mismatch;
            for v in [x, y] {
                self.degrees_nr[v] += e1;
                self.degrees_cl[v] += e2;
                self.degrees_poisson_cl[v] += e3;
            }
        }
        self.nr_differs |= e1 != e3;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::rng_from_seed;

    #[test]
    fn coupling_is_monotone_at_small_q() {
        for &u in &[0.1, 0.5, 0.9, 0.95, 0.999] {
            let (i, j) = bernoulli_poisson_coupling(0.1, u);
            if u <= 0.9 {
                assert_eq!((i, j), (0, 0));
            } else {
                assert_eq!(i, 1);
            }
        }
    }

    #[test]
    fn closed_form_mismatch_matches_quadrature_over_u() {
        for &q in &[0.01, 0.1, 0.5] {
            // Midpoint rule over u: the integrand is piecewise constant.
            let m = 2_000_000;
            let s: f64 = (0..m)
                .map(|k| {
                    let u = (k as f64 + 0.5) / m as f64;
                    let (i, j) = bernoulli_poisson_coupling(q, u);
                    i.abs_diff(j) as f64
                })
                .sum::<f64>()
                / m as f64;
            assert!((s - coupling_mean_mismatch(q)).abs() < 1e-5, "q={q}: {s}");
            assert!(coupling_mean_mismatch(q) <= q * q);
        }
    }

    #[test]
    fn two_unit_weights_satisfy_a_n() {
        let mut rng = rng_from_seed(5);
        for _ in 0..200 {
            let t = couple_on_weights(vec![1.0, 1.0], &mut rng);
            assert!(t.a_n);
            assert!(!t.nr_differs);
            assert_eq!(t.degrees_nr, t.degrees_poisson_cl);
        }
    }

    #[test]
    fn degree_gaps_are_bounded_by_d_e() {
        let dist = WeightDistribution::pareto(1.5, 1.0).unwrap();
        for seed in 0..50 {
            let t = generate_coupled(300, &dist, seed).unwrap();
            for x in 0..300 {
                assert!(t.degrees_cl[x].abs_diff(t.degrees_poisson_cl[x]) <= t.d_e);
            }
            if t.d_e == 0 {
                assert_eq!(t.degrees_cl, t.degrees_poisson_cl);
            }
            if t.a_n {
                assert_eq!(t.degrees_nr, t.degrees_poisson_cl);
            }
        }
    }

    #[test]
    fn marginal_pair_laws() {
        // Weights (4, 2), L = 6: p' = 8/3 for the loop at 0 and 4/3 for the
        // pair, both capped to p = 1.
        let reps = 100_000;
        let mut rng = rng_from_seed(9);
        let (mut nr, mut cl, mut pcl) = (0.0, 0.0, 0.0);
        for _ in 0..reps {
            let t = couple_on_weights(vec![4.0, 2.0], &mut rng);
            nr += t.degrees_nr[0] as f64;
            cl += t.degrees_cl[0] as f64;
            pcl += t.degrees_poisson_cl[0] as f64;
        }
        let r = reps as f64;
        assert!((nr / r - 4.0).abs() < 0.02, "{}", nr / r);
        assert_eq!(cl / r, 2.0);
        assert!((pcl / r - 2.0).abs() < 0.02, "{}", pcl / r);
    }
}
