//! Numerical building blocks: adaptive quadrature, bracketed root finding
//! and small Poisson/geometric samplers used by the generators.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use rand::Rng;
use rand_distr::{Distribution, Exp1};

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_18,
    0.140_653_259_715_525_92,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_83,
];
const WG: [f64; 4] =
    [0.129_484_966_168_869_7, 0.279_705_391_489_276_7, 0.381_830_050_505_118_9, 0.417_959_183_673_469_4];

/// Result of an adaptive integration.
#[derive(Debug, Clone, Copy)]
pub struct Quadrature {
    pub value: f64,
    pub error: f64,
    pub intervals: usize,
}

fn kronrod15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut kronrod = fc * WGK[7];
    let mut gauss = fc * WG[3];
    for (j, &x) in XGK.iter().take(7).enumerate() {
        let dx = half * x;
        let pair = f(center - dx) + f(center + dx);
        kronrod += WGK[j] * pair;
        if j % 2 == 1 {
            gauss += WG[j / 2] * pair;
        }
    }
    (kronrod * half, ((kronrod - gauss) * half).abs())
}

struct Piece {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

impl PartialEq for Piece {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}
impl Eq for Piece {}
impl PartialOrd for Piece {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Piece {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

/// Globally adaptive Gauss-Kronrod (7/15) quadrature on a finite interval.
///
/// The interval with the largest error estimate is bisected until the
/// summed error falls below `max(abs_tol, rel_tol * |value|)` or
/// `max_intervals` pieces exist. The integrand is never evaluated at the
/// endpoints, so integrable endpoint singularities are fine.
pub fn integrate<F: Fn(f64) -> f64>(
    f: F,
    a: f64,
    b: f64,
    abs_tol: f64,
    rel_tol: f64,
    max_intervals: usize,
) -> Quadrature {
    let (value, error) = kronrod15(&f, a, b);
    let mut heap = BinaryHeap::new();
    heap.push(Piece { a, b, value, error });
    let mut total = value;
    let mut total_err = error;
    let mut count = 1;
    while total_err > abs_tol.max(rel_tol * total.abs()) && count < max_intervals {
        let Some(worst) = heap.pop() else { break };
        let mid = 0.5 * (worst.a + worst.b);
        if mid <= worst.a || mid >= worst.b {
            heap.push(worst);
            break;
        }
        let (v1, e1) = kronrod15(&f, worst.a, mid);
        let (v2, e2) = kronrod15(&f, mid, worst.b);
        total += v1 + v2 - worst.value;
        total_err += e1 + e2 - worst.error;
        heap.push(Piece { a: worst.a, b: mid, value: v1, error: e1 });
        heap.push(Piece { a: mid, b: worst.b, value: v2, error: e2 });
        count += 1;
    }
    // Re-sum to shed the drift of the running totals.
    let value = heap.iter().map(|p| p.value).sum();
    let error = heap.iter().map(|p| p.error).sum();
    Quadrature { value, error, intervals: count }
}

/// Smallest `x` in `[lo, hi]` (up to relative width `rel_tol`) for which
/// `pred(x)` holds, assuming `pred` is monotone (false then true) and
/// `pred(hi)` is true. Returns the upper end of the final bracket.
pub fn bisect_threshold<P: Fn(f64) -> bool>(pred: P, mut lo: f64, mut hi: f64, rel_tol: f64, max_iter: usize) -> f64 {
    for _ in 0..max_iter {
        if hi - lo <= rel_tol * hi.abs() {
            break;
        }
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if pred(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    hi
}

/// Smallest `k` with `P(Poisson(mean) <= k) >= u`.
pub fn poisson_inverse_cdf(mean: f64, u: f64) -> u64 {
    if mean <= 0.0 {
        return 0;
    }
    let ln_mean = mean.ln();
    let mut ln_pmf = -mean;
    let mut cdf = ln_pmf.exp();
    let mut k = 0u64;
    // Beyond mean + 40 sd the remaining mass is below f64 resolution.
    let cap = (mean + 40.0 * mean.sqrt() + 40.0) as u64;
    while cdf < u && k < cap {
        k += 1;
        ln_pmf += ln_mean - (k as f64).ln();
        cdf += ln_pmf.exp();
    }
    k
}

/// Poisson variate; inversion for small means, `rand_distr` otherwise.
pub fn sample_poisson<R: Rng + ?Sized>(rng: &mut R, mean: f64) -> u64 {
    if mean <= 0.0 {
        0
    } else if mean < 12.0 {
        let u: f64 = rng.gen();
        poisson_inverse_cdf(mean, u)
    } else {
        let d = rand_distr::Poisson::new(mean).expect("finite positive mean");
        d.sample(rng) as u64
    }
}

/// Number of failures before the first success of independent trials that
/// each succeed with probability `1 - exp(-hazard)`.
#[inline]
pub fn skip_by_hazard<R: Rng + ?Sized>(rng: &mut R, hazard: f64) -> u64 {
    let e: f64 = Exp1.sample(rng);
    let s = e / hazard;
    if s >= u64::MAX as f64 {
        u64::MAX
    } else {
        s as u64
    }
}

/// Number of failures before the first success with success probability `p`.
#[inline]
pub fn skip_by_probability<R: Rng + ?Sized>(rng: &mut R, p: f64) -> u64 {
    if p >= 1.0 {
        return 0;
    }
    skip_by_hazard(rng, -(-p).ln_1p())
}

/// Uniform draw from the open interval (0, 1].
#[inline]
pub fn open_uniform<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    1.0 - rng.gen::<f64>()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_pcg::Pcg64Mcg;

    #[test]
    fn quadrature_polynomial_and_singular() {
        let q = integrate(|x| x * x, 0.0, 3.0, 0.0, 1e-12, 100);
        assert!((q.value - 9.0).abs() < 1e-12);
        // int_0^1 x^{-1/2} dx = 2
        let q = integrate(|x| x.powf(-0.5), 0.0, 1.0, 0.0, 1e-10, 2000);
        assert!((q.value - 2.0).abs() < 1e-8, "{}", q.value);
    }

    #[test]
    fn bisection_finds_sqrt2() {
        let r = bisect_threshold(|x| x * x >= 2.0, 0.0, 2.0, 1e-14, 200);
        assert!((r - 2f64.sqrt()).abs() < 1e-13);
    }

    #[test]
    fn poisson_inverse_matches_pmf() {
        // P(N=0) = e^{-1} for mean 1
        assert_eq!(poisson_inverse_cdf(1.0, 0.367), 0);
        assert_eq!(poisson_inverse_cdf(1.0, 0.368), 1);
        assert_eq!(poisson_inverse_cdf(0.0, 0.99), 0);
        // large means do not underflow
        let k = poisson_inverse_cdf(1000.0, 0.5);
        assert!((990..=1010).contains(&k), "{k}");
    }

    #[test]
    fn poisson_sampler_moments() {
        let mut rng = Pcg64Mcg::seed_from_u64(7);
        for &mean in &[0.3, 4.0, 50.0] {
            let n = 200_000;
            let xs: Vec<f64> = (0..n).map(|_| sample_poisson(&mut rng, mean) as f64).collect();
            let m = xs.iter().sum::<f64>() / n as f64;
            let v = xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1) as f64;
            let se = (mean / n as f64).sqrt();
            assert!((m - mean).abs() < 5.0 * se, "mean {m} vs {mean}");
            assert!((v / mean - 1.0).abs() < 0.03, "var {v} vs {mean}");
        }
    }

    #[test]
    fn geometric_skip_mean() {
        let mut rng = Pcg64Mcg::seed_from_u64(3);
        let p = 0.2;
        let n = 200_000;
        let mean = (0..n).map(|_| skip_by_probability(&mut rng, p) as f64).sum::<f64>() / n as f64;
        // failures before success: (1-p)/p = 4
        assert!((mean - 4.0).abs() < 0.05, "{mean}");
    }
}
