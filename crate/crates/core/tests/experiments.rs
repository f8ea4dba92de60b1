use scalefree::experiments::{run_experiment, ExperimentConfig, ExperimentKind, GatePolicy};
use scalefree::stats::{mean, variance};
use scalefree::{ModelConfig, ModelKind, WeightDistribution};

fn pareto(beta: f64) -> WeightDistribution {
    WeightDistribution::pareto(beta, 1.0).unwrap()
}

fn model_iv(beta: f64) -> ModelConfig {
    ModelConfig::new(ModelKind::NorrosReittu, pareto(beta), 1000)
}

/// The k-count mean is biased upwards by Poisson smoothing of the degrees at
/// the scale `q(n/k)`. 1.15977 is the exact expectation of the k-count over
/// `nu` at n = 1e5, theta = 0.5, computed by numerical integration.
#[test]
fn k_count_matches_its_exact_expectation() {
    let cfg = ExperimentConfig::new(ExperimentKind::PoissonPp, model_iv(2.0), 500, 21)
        .with_sweep(vec![100_000])
        .with_theta(0.5)
        .with_k_variant(true);
    let report = run_experiment(&cfg).unwrap();
    let interval = &cfg.intervals[0];
    let nu = interval.a.powf(-2.0) - if interval.b.is_finite() { interval.b.powf(-2.0) } else { 0.0 };
    let counts = report.column(&format!("kcount_{}", interval.label()), 100_000);
    let scaled: Vec<f64> = counts.iter().map(|c| c / nu).collect();
    let se = (variance(&scaled) / scaled.len() as f64).sqrt();
    let m = mean(&scaled);
    assert!((m - 1.15977).abs() < 3.0 * se, "mean {m}, se {se}");
    assert!(variance(&counts).sqrt() < 0.2);
    assert!(report.check("sd_kcount_1_inf").unwrap().passed);
}

#[test]
fn ordering_frequency_does_not_grow_with_depth() {
    let cfg = ExperimentConfig::new(ExperimentKind::Ordering, model_iv(1.5), 200, 4)
        .with_sweep(vec![1_000, 10_000])
        .with_depth(2);
    let report = run_experiment(&cfg).unwrap();
    for n in [1_000, 10_000] {
        let a1 = report.aggregate(Some(n), "mean_a_1").unwrap();
        let a2 = report.aggregate(Some(n), "mean_a_2").unwrap();
        assert!(a2 <= a1, "n = {n}: {a2} > {a1}");
    }
    let checks: Vec<_> = report.checks.iter().filter(|c| c.name == "a_2_not_above_a_1").collect();
    assert_eq!(checks.len(), 2);
    assert!(checks.iter().all(|c| c.passed));
}

#[test]
fn huge_correspondence_threshold_has_no_mismatches() {
    let cfg = ExperimentConfig::new(ExperimentKind::WeightDegreeCorrespondence, model_iv(2.0), 30, 8)
        .with_sweep(vec![1_000, 10_000])
        .with_thresholds(vec![1e12]);
    let report = run_experiment(&cfg).unwrap();
    for n in [1_000, 10_000] {
        assert!(report.column("big_degree_1000000000000", n).iter().all(|&x| x == 0.0));
        assert!(report.column("big_weight_1000000000000", n).iter().all(|&x| x == 0.0));
    }
}

#[test]
fn failed_hill_estimates_are_counted_and_excluded() {
    let cfg = ExperimentConfig::new(ExperimentKind::HillConsistency, model_iv(3.0), 40, 2)
        .with_sweep(vec![20])
        .with_theta(0.95);
    let report = run_experiment(&cfg).unwrap();
    let failed = report.column("failed", 20);
    let hill = report.column("hill", 20);
    let excluded = failed.iter().filter(|&&f| f == 1.0).count();
    assert!(excluded > 0);
    for (f, h) in failed.iter().zip(&hill) {
        assert_eq!(*f == 1.0, h.is_nan());
    }
    assert_eq!(report.aggregate(Some(20), "excluded"), Some(excluded as f64));
    assert!(report.aggregate(Some(20), "mean_hill").is_none_or(f64::is_finite));
}

#[test]
fn echoed_gamma_follows_the_scaling_of_each_model() {
    let cases = [
        (ModelConfig::new(ModelKind::Lattice, pareto(2.0), 200).with_dim(2).with_alpha(4.0), 4.0),
        (ModelConfig::new(ModelKind::UltraSmall, WeightDistribution::inverse_uniform(0.5).unwrap(), 200), 1.0),
        (ModelConfig::new(ModelKind::Continuum, pareto(2.0), 200).with_dim(1).with_alpha(3.0), 6.0),
        (ModelConfig::new(ModelKind::NorrosReittu, pareto(2.5), 200), 2.5),
        (ModelConfig::new(ModelKind::ChungLu, pareto(3.0), 200), 3.0),
    ];
    for (model, gamma) in cases {
        let kind = model.kind;
        let cfg = ExperimentConfig::new(ExperimentKind::MaxDegree, model, 1, 1)
            .with_sweep(vec![200])
            .with_gate(GatePolicy::Auto);
        let report = run_experiment(&cfg).unwrap();
        assert!((report.references[0].gamma - gamma).abs() < 1e-12, "model {kind}");
    }
}

#[test]
fn coupling_outside_the_proven_regime_warns() {
    let cfg = ExperimentConfig::new(ExperimentKind::Coupling, model_iv(1.8), 30, 1).with_sweep(vec![500]);
    let report = run_experiment(&cfg).unwrap();
    assert!(report.warnings.iter().any(|w| w.contains("beta > 2")), "{:?}", report.warnings);
}

#[test]
fn reports_are_reproducible() {
    let cfg = ExperimentConfig::new(ExperimentKind::Coupling, model_iv(3.0), 30, 9).with_sweep(vec![300, 3_000]);
    let a = run_experiment(&cfg).unwrap();
    let b = run_experiment(&cfg).unwrap();
    assert_eq!(a.to_csv(), b.to_csv());
    assert_eq!(a.to_json(), b.to_json());
}
