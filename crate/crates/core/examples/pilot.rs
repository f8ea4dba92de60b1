//! Pilot runs behind `calibration.json`: every acceptance configuration at
//! a master seed disjoint from the test seeds.
//!
//! `cargo run --release --example pilot -- <seed> [name ...]`

use scalefree::experiments::{run_experiment, ExperimentConfig, ExperimentKind, GatePolicy};
use scalefree::{ModelConfig, ModelKind, WeightDistribution};

fn pareto(beta: f64) -> WeightDistribution {
    WeightDistribution::pareto(beta, 1.0).expect("valid Pareto")
}

fn configs(seed: u64) -> Vec<(&'static str, ExperimentConfig)> {
    use ExperimentKind::*;
    let nr = |beta| ModelConfig::new(ModelKind::NorrosReittu, pareto(beta), 1000);
    let lattice = ModelConfig::new(ModelKind::Lattice, pareto(1.0), 1000);
    let ultra =
        ModelConfig::new(ModelKind::UltraSmall, WeightDistribution::inverse_uniform(1.0).expect("valid"), 100_000)
            .with_dim(2);
    vec![
        ("frechet-iv", ExperimentConfig::new(MaxDegree, nr(2.0), 500, seed).with_sweep(vec![1_000, 10_000, 100_000])),
        (
            "frechet-i",
            ExperimentConfig::new(MaxDegree, lattice.clone(), 500, seed)
                .with_sweep(vec![1_000, 10_000])
                .with_gate(GatePolicy::Auto),
        ),
        (
            "poisson",
            ExperimentConfig::new(PoissonPp, nr(2.0), 500, seed).with_sweep(vec![100_000]).with_k_variant(true),
        ),
        (
            "hill",
            ExperimentConfig::new(HillConsistency, nr(3.0), 50, seed)
                .with_sweep(vec![1_000, 10_000, 100_000])
                .with_theta(0.4),
        ),
        ("ordering", ExperimentConfig::new(Ordering, nr(1.5), 200, seed).with_sweep(vec![1_000, 10_000]).with_depth(2)),
        (
            "correspondence",
            ExperimentConfig::new(WeightDegreeCorrespondence, nr(2.0), 200, seed)
                .with_sweep(vec![1_000, 10_000, 100_000]),
        ),
        (
            "coupling",
            ExperimentConfig::new(Coupling, nr(3.0), 200, seed).with_sweep(vec![100, 1_000, 10_000]).with_theta(0.4),
        ),
        (
            "tail-i",
            ExperimentConfig::new(DegreeTail, lattice, 20, seed).with_sweep(vec![100_000]).with_gate(GatePolicy::Auto),
        ),
        ("tail-ii", ExperimentConfig::new(DegreeTail, ultra, 5, seed)),
        ("tail-iv", ExperimentConfig::new(DegreeTail, nr(2.5), 20, seed).with_sweep(vec![100_000])),
    ]
}

fn main() {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let seed: u64 = args.first().and_then(|s| s.parse().ok()).unwrap_or(1001);
    let only = &args[args.len().min(1)..];
    for (name, cfg) in configs(seed) {
        if !only.is_empty() && !only.iter().any(|o| o == name) {
            continue;
        }
        match run_experiment(&cfg) {
            Ok(rep) => {
                println!("{name} (seed {seed}, {:.1?}):", rep.wall_clock);
                for c in &rep.checks {
                    println!(
                        "  {:<5} {:<34} n={:<8} observed={:.4} lower={:?} upper={:?}",
                        if c.passed { "pass" } else { "FAIL" },
                        c.name,
                        c.n.map_or("-".into(), |n| n.to_string()),
                        c.observed,
                        c.lower,
                        c.upper
                    );
                }
                for a in rep.aggregates.iter().chain(&rep.pooled) {
                    let interesting = [
                        "ks",
                        "mean_over_nu_1_inf",
                        "dispersion_1_inf",
                        "sd_kcount_1_inf",
                        "mean_hill",
                        "abs_bias_hill",
                        "abs_bias_hill_weights",
                        "mean_a_1",
                        "mean_a_2",
                        "mean_g1_ne_g3",
                        "mean_d_e",
                        "mean_abs_h2_h3",
                        "mean_big_degree_1",
                        "mean_big_weight_1",
                        "pooled_slope",
                        "d_e_trend_p",
                    ];
                    if interesting.contains(&a.statistic.as_str()) {
                        println!("    {:?} {} = {:.4}", a.n, a.statistic, a.value);
                    }
                }
                for w in &rep.warnings {
                    println!("  warning: {w}");
                }
            }
            Err(e) => println!("{name}: error {e}"),
        }
    }
}
