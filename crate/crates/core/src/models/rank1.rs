//! Models IV (Norros-Reittu) and V (Chung-Lu) on `{1..n}`.
//!
//! Fast model IV superposes `Poisson(L/2)` ordered pairs whose endpoints are
//! drawn independently proportional to weight, plus `Poisson(W_x^2 / 2L)`
//! extra loops per vertex. Pair `{x, y}` then carries `Poisson(W_x W_y / L)`
//! edges and vertex `x` carries `Poisson(W_x^2 / L)` loops, independently.
//!
//! Fast model V visits the vertices by decreasing weight. Within a row the
//! edge probability is nonincreasing, so candidates are found by geometric
//! jumps under the previous probability and thinned to the current one.

use rand::Rng;
use rand_distr::{Distribution, WeightedAliasIndex};
use rustc_hash::FxHashMap;

use super::edges::{EdgeList, VertexLabel};
use super::{Generated, GeneratorMode, ModelConfig, ModelKind};
use crate::numeric::{sample_poisson, skip_by_probability};

/// `L_n`, summed in index order.
pub fn total_weight(weights: &[f64]) -> f64 {
    weights.iter().sum()
}

/// Samples the edges of model IV or V on fixed weights. `sink(x, y, m)`
/// receives each unordered pair `x <= y` carrying `m >= 1` edges; the fast
/// model IV sampler reports a pair once per superposed edge with `m = 1`.
pub fn sample_rank1_edges<R, F>(kind: ModelKind, mode: GeneratorMode, weights: &[f64], rng: &mut R, mut sink: F)
where
    R: Rng + ?Sized,
    F: FnMut(usize, usize, u32),
{
    let n = weights.len();
    if n == 0 {
        return;
    }
    let total = total_weight(weights);
    match (kind, mode) {
        (ModelKind::NorrosReittu, GeneratorMode::Naive) => {
            for x in 0..n {
                for y in x..n {
                    let m = sample_poisson(rng, weights[x] * weights[y] / total);
                    if m > 0 {
                        sink(x, y, m as u32);
                    }
                }
            }
        }
        (ModelKind::NorrosReittu, GeneratorMode::Fast) => {
            let alias = WeightedAliasIndex::new(weights.to_vec()).expect("positive finite weights");
            let pairs = sample_poisson(rng, total / 2.0);
            for _ in 0..pairs {
                let x = alias.sample(rng);
                let y = alias.sample(rng);
                sink(x.min(y), x.max(y), 1);
            }
            for (x, &w) in weights.iter().enumerate() {
                let loops = sample_poisson(rng, w * w / (2.0 * total));
                for _ in 0..loops {
                    sink(x, x, 1);
                }
            }
        }
        (ModelKind::ChungLu, GeneratorMode::Naive) => {
            for x in 0..n {
                for y in x..n {
                    let p = (weights[x] * weights[y] / total).min(1.0);
                    if rng.gen::<f64>() < p {
                        sink(x, y, 1);
                    }
                }
            }
        }
        (ModelKind::ChungLu, GeneratorMode::Fast) => chung_lu_skip(weights, total, rng, sink),
        (kind, _) => panic!("model {kind} is not a rank-one model"),
    }
}

fn chung_lu_skip<R, F>(weights: &[f64], total: f64, rng: &mut R, mut sink: F)
where
    R: Rng + ?Sized,
    F: FnMut(usize, usize, u32),
{
    let n = weights.len();
    let mut order: Vec<usize> = (0..n).collect();
    // Stable sort keeps equal weights in index order.
    order.sort_by(|&a, &b| weights[b].total_cmp(&weights[a]));
    for i in 0..n {
        let wi = weights[order[i]];
        let mut j = i;
        let mut bound = (wi * weights[order[j]] / total).min(1.0);
        while j < n && bound > 0.0 {
            if bound < 1.0 {
                let skip = skip_by_probability(rng, bound);
                j = j.saturating_add(usize::try_from(skip).unwrap_or(usize::MAX));
                if j >= n {
                    break;
                }
            }
            let p = (wi * weights[order[j]] / total).min(1.0);
            if p >= bound || rng.gen::<f64>() * bound < p {
                let (a, b) = (order[i], order[j]);
                sink(a.min(b), a.max(b), 1);
            }
            bound = p;
            j += 1;
        }
    }
}

pub(crate) fn generate<R: Rng + ?Sized>(config: &ModelConfig, rng: &mut R, edges: Option<&mut EdgeList>) -> Generated {
    let n = config.n as usize;
    let weights: Vec<f64> = (0..n).map(|_| config.weight.sample(rng)).collect();
    let mut degrees = vec![0u64; n];
    let mut pairs: FxHashMap<(usize, usize), u32> = FxHashMap::default();
    let keep = edges.is_some();
    sample_rank1_edges(config.kind, config.mode, &weights, rng, |x, y, m| {
        if x == y {
            degrees[x] += u64::from(m);
        } else {
            degrees[x] += u64::from(m);
            degrees[y] += u64::from(m);
        }
        if keep {
            *pairs.entry((x, y)).or_insert(0) += m;
        }
    });
    if let Some(list) = edges {
        let mut sorted: Vec<_> = pairs.into_iter().collect();
        sorted.sort_unstable();
        for ((x, y), m) in sorted {
            list.push(VertexLabel::Index(x as u64 + 1), VertexLabel::Index(y as u64 + 1), m);
        }
    }
    Generated { positions: Vec::new(), weights, degrees, simulated: n as u64, buffer: None }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::rng_from_seed;

    fn pair_counts(kind: ModelKind, mode: GeneratorMode, w: &[f64], reps: usize) -> Vec<Vec<f64>> {
        let n = w.len();
        let mut counts = vec![vec![0.0; n]; n];
        let mut rng = rng_from_seed(7);
        for _ in 0..reps {
            sample_rank1_edges(kind, mode, w, &mut rng, |x, y, m| counts[x][y] += f64::from(m));
        }
        counts
    }

    #[test]
    fn norros_reittu_fast_pair_means() {
        let w = [1.0, 2.0, 3.0, 0.5];
        let total: f64 = w.iter().sum();
        let reps = 200_000;
        let c = pair_counts(ModelKind::NorrosReittu, GeneratorMode::Fast, &w, reps);
        for x in 0..4 {
            for y in x..4 {
                let mu = w[x] * w[y] / total;
                let got = c[x][y] / reps as f64;
                let se = (mu / reps as f64).sqrt();
                assert!((got - mu).abs() < 5.0 * se, "pair ({x},{y}): {got} vs {mu}");
            }
        }
    }

    #[test]
    fn chung_lu_fast_pair_frequencies() {
        let w = [4.0, 1.0, 2.5, 0.5, 2.5];
        let total: f64 = w.iter().sum();
        let reps = 100_000;
        let c = pair_counts(ModelKind::ChungLu, GeneratorMode::Fast, &w, reps);
        for x in 0..5 {
            for y in x..5 {
                let p = (w[x] * w[y] / total).min(1.0);
                let got = c[x][y] / reps as f64;
                let se = (p * (1.0 - p) / reps as f64).sqrt().max(1e-9);
                assert!((got - p).abs() <= 5.0 * se, "pair ({x},{y}): {got} vs {p}");
            }
        }
    }

    #[test]
    fn chung_lu_never_repeats_a_pair() {
        let w: Vec<f64> = (1..=50).map(|i| 60.0 / i as f64).collect();
        let mut rng = rng_from_seed(3);
        let mut seen = std::collections::HashSet::new();
        sample_rank1_edges(ModelKind::ChungLu, GeneratorMode::Fast, &w, &mut rng, |x, y, _| {
            assert!(seen.insert((x, y)));
        });
    }

    #[test]
    fn self_loops_count_once() {
        let cfg = ModelConfig::new(ModelKind::NorrosReittu, crate::WeightDistribution::pareto(2.0, 1.0).unwrap(), 1);
        let mut list = EdgeList::new(0);
        let g = generate(&cfg, &mut rng_from_seed(11), Some(&mut list));
        assert_eq!(g.degrees[0], list.total_multiplicity());
    }
}
