//! Monte Carlo drivers that turn the limit theorems into statistical reports.
//!
//! Every replication owns one random stream, seeded by
//! `split_stream(split_stream(master_seed, n), replication)`. Streams depend
//! only on the master seed, the window size and the replication index, so the
//! rows of a report do not depend on the number of workers, on the replication
//! count or on the other entries of the n-sweep.
//!
//! # Report schema
//!
//! Rows (CSV): `replication,n,seed` followed by the kind-specific columns:
//!
//! | kind                          | columns                                                          |
//! |-------------------------------|------------------------------------------------------------------|
//! | max-degree                    | `window,max_degree,rescaled_max`                                 |
//! | poisson-pp                    | `count_a_b` per interval; with the `k` variant also `k,kcount_a_b` |
//! | hill-consistency              | `k,hill,std_error,failed`, and `hill_weights` with the iid oracle |
//! | ordering                      | `a_1 .. a_depth` (indicator of the ordering event at each depth) |
//! | coupling                      | `a_n,g1_ne_g3,d_e,k,h1,h2,h3,abs_h2_h3`                           |
//! | weight-degree-correspondence  | `big_degree_a,big_weight_a` per threshold `a`                    |
//! | degree-tail                   | `window,max_degree,mean_degree`                                  |
//!
//! A failed Hill estimate is `NaN` with `failed = 1` and is left out of the
//! aggregates. Aggregates (JSON) are keyed by `n` and statistic name and are
//! functions of the rows alone. `pooled` statistics are computed from the
//! degrees of all replications at one `n` and are not recomputable from rows.
//! Checks compare aggregates with the thresholds of `calibration.json`,
//! optionally overridden per experiment; assertions that rest on a normal
//! approximation need at least [`MIN_REPLICATIONS_FOR_CI`] replications.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;
use std::sync::OnceLock;
use std::time::{Duration, Instant};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimators::{hill_estimate, intermediate_sequence, ks_distance, tail_slope, FrechetLaw};
use crate::models::{
    self, auto_buffer, estimate_truncation_bias, generate, generate_coupled, ModelConfig, ModelKind, ScalingConstants,
    TRUNCATION_GATE_LEVEL,
};
use crate::pointproc::{kth_weight_has_kth_degree, nu_measure, RescaledDegrees};
use crate::stats;

/// Replications required before an assertion may use a normal
/// approximation.
pub const MIN_REPLICATIONS_FOR_CI: usize = 30;

/// Default intermediate-sequence exponent.
pub const DEFAULT_THETA: f64 = 0.5;

/// Default top fraction for the degree-tail slope.
pub const DEFAULT_TAIL_FRACTION: f64 = 0.01;

/// Standard deviation of the Kolmogorov distribution,
/// `sqrt(pi^2 / 12 - (pi / 2) ln^2 2)`: the spread of `sqrt(R) KS` under the
/// null.
pub const KOLMOGOROV_SD: f64 = 0.260_332_87;

const GOLDEN_GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

/// The splitmix64 finaliser, a bijection on 64-bit words.
fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed of stream `index` under `master_seed`:
/// `mix64(mix64(master_seed) + (index + 1) * 0x9E3779B97F4A7C15)`.
/// For a fixed master seed the map is a bijection of `index`, so distinct
/// indices never collide.
pub fn split_stream(master_seed: u64, index: u64) -> u64 {
    mix64(mix64(master_seed).wrapping_add(index.wrapping_add(1).wrapping_mul(GOLDEN_GAMMA)))
}

/// Seed of replication `replication` at window size `n`.
pub fn replication_seed(master_seed: u64, n: u64, replication: u64) -> u64 {
    split_stream(split_stream(master_seed, n), replication)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    MaxDegree,
    PoissonPp,
    HillConsistency,
    Ordering,
    Coupling,
    DegreeTail,
    WeightDegreeCorrespondence,
}

impl ExperimentKind {
    pub const ALL: [ExperimentKind; 7] = [
        Self::MaxDegree,
        Self::PoissonPp,
        Self::HillConsistency,
        Self::Ordering,
        Self::Coupling,
        Self::DegreeTail,
        Self::WeightDegreeCorrespondence,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Self::MaxDegree => "max-degree",
            Self::PoissonPp => "poisson-pp",
            Self::HillConsistency => "hill-consistency",
            Self::Ordering => "ordering",
            Self::Coupling => "coupling",
            Self::DegreeTail => "degree-tail",
            Self::WeightDegreeCorrespondence => "weight-degree-correspondence",
        }
    }
}

impl fmt::Display for ExperimentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ExperimentKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let t = s.trim().to_ascii_lowercase();
        Self::ALL
            .into_iter()
            .find(|k| k.name() == t)
            .ok_or_else(|| Error::param("kind", format!("unknown experiment kind `{t}`")))
    }
}

/// What to do when the truncation bias of model I or III exceeds the gate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GatePolicy {
    /// Fail before simulating.
    #[default]
    Refuse,
    /// Simulate anyway and record a warning.
    Warn,
    /// Double the buffer until the gate passes.
    Auto,
}

impl fmt::Display for GatePolicy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Refuse => "refuse",
            Self::Warn => "warn",
            Self::Auto => "auto",
        })
    }
}

impl FromStr for GatePolicy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "refuse" => Ok(Self::Refuse),
            "warn" => Ok(Self::Warn),
            "auto" => Ok(Self::Auto),
            other => Err(Error::param("gate", format!("expected refuse, warn or auto, got `{other}`"))),
        }
    }
}

/// Half-open interval `(a, b]` with `0 < a <= b <= inf`. An infinite `b`
/// is stored as JSON `null`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub a: f64,
    #[serde(with = "infinite_as_null")]
    pub b: f64,
}

mod infinite_as_null {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(b: &f64, s: S) -> Result<S::Ok, S::Error> {
        if b.is_infinite() {
            s.serialize_none()
        } else {
            s.serialize_some(b)
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        Ok(Option::<f64>::deserialize(d)?.unwrap_or(f64::INFINITY))
    }
}

impl Interval {
    pub fn new(a: f64, b: f64) -> Result<Self> {
        if !(a > 0.0 && a.is_finite()) || !(b >= a) {
            return Err(Error::param("intervals", format!("need 0 < a <= b, got ({a}, {b}]")));
        }
        Ok(Self { a, b })
    }

    /// Intervals that share no point.
    pub fn disjoint(&self, other: &Interval) -> bool {
        self.b <= other.a || other.b <= self.a
    }

    /// `a_b` with `inf` for an infinite end, as used in column names.
    pub fn label(&self) -> String {
        format!("{}_{}", fmt_num(self.a), fmt_num(self.b))
    }
}

impl fmt::Display for Interval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{}]", fmt_num(self.a), fmt_num(self.b))
    }
}

impl FromStr for Interval {
    type Err = Error;

    /// `(a,b]`, with `inf` allowed for `b`.
    fn from_str(s: &str) -> Result<Self> {
        let t = s.trim();
        let inner = t
            .strip_prefix('(')
            .and_then(|r| r.strip_suffix(']'))
            .ok_or_else(|| Error::param("intervals", format!("expected `(a,b]`, got `{t}`")))?;
        let (a, b) =
            inner.split_once(',').ok_or_else(|| Error::param("intervals", format!("expected `(a,b]`, got `{t}`")))?;
        let num = |x: &str| -> Result<f64> {
            x.trim()
                .parse::<f64>()
                .map_err(|_| Error::param("intervals", format!("bad endpoint `{}` in `{t}`", x.trim())))
        };
        Interval::new(num(a)?, num(b)?)
    }
}

/// Shortest round-trip decimal form, `inf` for infinity.
pub fn fmt_num(x: f64) -> String {
    if x.is_infinite() {
        if x > 0.0 {
            "inf".into()
        } else {
            "-inf".into()
        }
    } else {
        format!("{x}")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub model: ModelConfig,
    pub kind: ExperimentKind,
    pub replications: usize,
    pub master_seed: u64,
    /// Window sizes, strictly increasing; each overrides `model.n`.
    pub sweep: Vec<u64>,
    /// Intervals for the point-process counts.
    pub intervals: Vec<Interval>,
    /// Exponent of the intermediate sequence `k = ceil(n^theta)`.
    pub theta: f64,
    /// Ordering depth.
    pub depth: usize,
    /// Correspondence thresholds `a`.
    pub thresholds: Vec<f64>,
    /// Top fraction for the degree-tail slope.
    pub tail_fraction: f64,
    /// Also evaluate `D_{k,n}` in the point-process experiment.
    pub k_variant: bool,
    /// Also run the Hill estimator on the iid sample `W^p`.
    pub hill_oracle: bool,
    pub gate: GatePolicy,
    /// Threshold overrides keyed as in `calibration.json`.
    pub assert: BTreeMap<String, f64>,
    /// Worker threads; 0 uses every logical CPU. Not part of the echo: the
    /// output does not depend on it.
    #[serde(skip)]
    pub workers: usize,
}

impl ExperimentConfig {
    pub fn new(kind: ExperimentKind, model: ModelConfig, replications: usize, master_seed: u64) -> Self {
        let sweep = vec![model.n];
        Self {
            model,
            kind,
            replications,
            master_seed,
            sweep,
            intervals: default_intervals(),
            theta: DEFAULT_THETA,
            depth: 1,
            thresholds: vec![1.0],
            tail_fraction: DEFAULT_TAIL_FRACTION,
            k_variant: false,
            hill_oracle: true,
            gate: GatePolicy::Refuse,
            assert: BTreeMap::new(),
            workers: 0,
        }
    }

    pub fn with_sweep(mut self, sweep: Vec<u64>) -> Self {
        if let Some(&last) = sweep.last() {
            self.model.n = last;
        }
        self.sweep = sweep;
        self
    }

    pub fn with_theta(mut self, theta: f64) -> Self {
        self.theta = theta;
        self
    }

    pub fn with_depth(mut self, depth: usize) -> Self {
        self.depth = depth;
        self
    }

    pub fn with_intervals(mut self, intervals: Vec<Interval>) -> Self {
        self.intervals = intervals;
        self
    }

    pub fn with_thresholds(mut self, thresholds: Vec<f64>) -> Self {
        self.thresholds = thresholds;
        self
    }

    pub fn with_k_variant(mut self, on: bool) -> Self {
        self.k_variant = on;
        self
    }

    pub fn with_gate(mut self, gate: GatePolicy) -> Self {
        self.gate = gate;
        self
    }

    pub fn with_workers(mut self, workers: usize) -> Self {
        self.workers = workers;
        self
    }

    pub fn with_tail_fraction(mut self, fraction: f64) -> Self {
        self.tail_fraction = fraction;
        self
    }

    /// Structural checks on the experiment parameters.
    pub fn check(&self) -> Result<()> {
        if self.replications == 0 {
            return Err(Error::param("replications", "need at least one replication"));
        }
        if self.sweep.is_empty() {
            return Err(Error::param("sweep", "empty n-sweep"));
        }
        if self.sweep[0] == 0 || self.sweep.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::param("sweep", format!("need 1 <= n strictly increasing, got {:?}", self.sweep)));
        }
        if !(self.theta > 0.0 && self.theta < 1.0) {
            return Err(Error::param("theta", format!("must lie in (0, 1), got {}", self.theta)));
        }
        if self.depth == 0 {
            return Err(Error::param("depth", "ordering depth must be at least 1"));
        }
        if self.kind == ExperimentKind::PoissonPp && self.intervals.is_empty() {
            return Err(Error::param("intervals", "no intervals"));
        }
        for i in &self.intervals {
            Interval::new(i.a, i.b)?;
        }
        if self.kind == ExperimentKind::WeightDegreeCorrespondence && self.thresholds.is_empty() {
            return Err(Error::param("thresholds", "no thresholds"));
        }
        if let Some(a) = self.thresholds.iter().find(|a| !(**a > 0.0)) {
            return Err(Error::param("thresholds", format!("must be positive, got {a}")));
        }
        if !(self.tail_fraction > 0.0 && self.tail_fraction <= 1.0) {
            return Err(Error::param("tail_fraction", format!("must lie in (0, 1], got {}", self.tail_fraction)));
        }
        if self.kind == ExperimentKind::Coupling
            && !matches!(self.model.kind, ModelKind::NorrosReittu | ModelKind::ChungLu)
        {
            return Err(Error::param("model", "the coupling experiment needs model IV or V"));
        }
        Thresholds::resolve(&self.assert)?;
        Ok(())
    }
}

/// `(1, inf]`, `(1, 2]` and `(2, inf]`.
pub fn default_intervals() -> Vec<Interval> {
    vec![Interval { a: 1.0, b: f64::INFINITY }, Interval { a: 1.0, b: 2.0 }, Interval { a: 2.0, b: f64::INFINITY }]
}

/// One entry of `calibration.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationEntry {
    pub value: f64,
    pub experiment: String,
    pub meaning: String,
    pub oracle: String,
    #[serde(default)]
    pub pilot: serde_json::Value,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Calibration {
    pub description: String,
    pub thresholds: BTreeMap<String, CalibrationEntry>,
}

const CALIBRATION_JSON: &str = include_str!("../calibration.json");

/// The checked-in calibration record.
pub fn calibration() -> &'static Calibration {
    static CAL: OnceLock<Calibration> = OnceLock::new();
    CAL.get_or_init(|| serde_json::from_str(CALIBRATION_JSON).expect("calibration.json is valid"))
}

/// Effective pass/fail thresholds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Thresholds(pub BTreeMap<String, f64>);

impl Thresholds {
    /// Calibrated values with `overrides` applied; unknown keys are errors.
    pub fn resolve(overrides: &BTreeMap<String, f64>) -> Result<Self> {
        let mut map: BTreeMap<String, f64> =
            calibration().thresholds.iter().map(|(k, e)| (k.clone(), e.value)).collect();
        for (k, &v) in overrides {
            match map.get_mut(k) {
                Some(slot) => *slot = v,
                None => return Err(Error::param("assert", format!("unknown threshold `{k}`"))),
            }
        }
        Ok(Self(map))
    }

    pub fn get(&self, key: &str) -> f64 {
        *self.0.get(key).unwrap_or_else(|| panic!("threshold `{key}` missing from calibration.json"))
    }
}

/// One replication.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Row {
    pub replication: u64,
    pub n: u64,
    pub seed: u64,
    pub values: Vec<f64>,
}

/// Reference constants and simulation settings at one `n`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Reference {
    pub n: u64,
    pub p: f64,
    pub gamma: f64,
    pub xi: f64,
    pub q_n: f64,
    /// Intermediate sequence value `ceil(n^theta)`.
    pub k: u64,
    /// `q(n/k)`; `None` when `k >= n`.
    pub q_n_over_k: Option<f64>,
    pub buffer: Option<f64>,
    /// Expected missed edges at the gate quantile weight.
    pub truncation_bias: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Aggregate {
    /// `None` for statistics across the sweep.
    pub n: Option<u64>,
    pub statistic: String,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub n: Option<u64>,
    pub observed: f64,
    pub lower: Option<f64>,
    pub upper: Option<f64>,
    pub passed: bool,
    /// Calibration keys the bounds come from.
    pub calibration: Vec<String>,
    pub note: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub config: ExperimentConfig,
    pub columns: Vec<String>,
    pub rows: Vec<Row>,
    pub references: Vec<Reference>,
    pub aggregates: Vec<Aggregate>,
    pub pooled: Vec<Aggregate>,
    pub checks: Vec<Check>,
    pub thresholds: Thresholds,
    pub warnings: Vec<String>,
    /// Excluded from serialisation so that reports are byte-identical
    /// across runs.
    #[serde(skip)]
    pub wall_clock: Duration,
}

impl ExperimentReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c == name)
    }

    /// Values of column `name` at window size `n`.
    pub fn column(&self, name: &str, n: u64) -> Vec<f64> {
        let j = self.column_index(name).unwrap_or_else(|| panic!("no column `{name}`"));
        self.rows.iter().filter(|r| r.n == n).map(|r| r.values[j]).collect()
    }

    /// The aggregate `statistic` at `n`.
    pub fn aggregate(&self, n: Option<u64>, statistic: &str) -> Option<f64> {
        self.aggregates.iter().chain(&self.pooled).find(|a| a.n == n && a.statistic == statistic).map(|a| a.value)
    }

    pub fn check(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }

    /// `kind_model_n<sweep>_s<seed>` without extension.
    pub fn file_stem(&self) -> String {
        let c = &self.config;
        let sweep: Vec<String> = c.sweep.iter().map(u64::to_string).collect();
        format!("{}_{}_n{}_s{}", c.kind, c.model.kind, sweep.join("-"), c.master_seed)
    }

    /// Header row and one line per replication.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("replication,n,seed");
        for c in &self.columns {
            out.push(',');
            out.push_str(c);
        }
        out.push('\n');
        for r in &self.rows {
            out.push_str(&format!("{},{},{}", r.replication, r.n, r.seed));
            for v in &r.values {
                out.push(',');
                out.push_str(&fmt_num(*v));
            }
            out.push('\n');
        }
        out
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serialises");
        s.push('\n');
        s
    }
}

/// Runs the experiment selected by `config.kind`.
pub fn run_experiment(config: &ExperimentConfig) -> Result<ExperimentReport> {
    config.check()?;
    let start = Instant::now();
    let thresholds = Thresholds::resolve(&config.assert)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(config.workers)
        .build()
        .map_err(|e| Error::Io(format!("worker pool: {e}")))?;
    let mut warnings = Vec::new();
    if config.replications < MIN_REPLICATIONS_FOR_CI {
        warnings.push(format!(
            "{} replications: checks using normal approximations need {MIN_REPLICATIONS_FOR_CI}",
            config.replications
        ));
    }
    let validation = models::validate(&config.model);
    if validation.outside_proven_regime() {
        warnings.push(format!("model {} is outside the proven regime", config.model.kind));
    }
    if config.kind == ExperimentKind::Coupling && config.model.weight.beta() <= 2.0 {
        warnings.push("coupling bounds are proven for beta > 2".into());
    }

    let columns = columns(config);
    let mut rows = Vec::new();
    let mut references = Vec::new();
    let mut pooled_degrees = Vec::new();
    for &n in &config.sweep {
        let (model, reference) = prepare(config, &thresholds, n, &mut warnings)?;
        let outs: Vec<Result<Replication>> = pool.install(|| {
            (0..config.replications as u64)
                .into_par_iter()
                .map(|r| replicate(config, &model, &reference, replication_seed(config.master_seed, n, r)))
                .collect()
        });
        let mut pooled = Vec::new();
        for (r, out) in outs.into_iter().enumerate() {
            let out = out?;
            rows.push(Row {
                replication: r as u64,
                n,
                seed: replication_seed(config.master_seed, n, r as u64),
                values: out.values,
            });
            pooled.extend(out.degrees);
        }
        references.push(reference);
        pooled_degrees.push(pooled);
    }

    let mut report = ExperimentReport {
        config: config.clone(),
        columns,
        rows,
        references,
        aggregates: Vec::new(),
        pooled: Vec::new(),
        checks: Vec::new(),
        thresholds,
        warnings,
        wall_clock: Duration::ZERO,
    };
    report.aggregates = aggregate_rows(&report);
    report.pooled = pooled_statistics(&report, &pooled_degrees);
    report.checks = evaluate_checks(&report);
    report.wall_clock = start.elapsed();
    Ok(report)
}

/// Frechet limit of the rescaled maximum degree.
pub fn run_max_degree(config: &ExperimentConfig) -> Result<ExperimentReport> {
    run_kind(config, ExperimentKind::MaxDegree)
}

/// Interval counts of `D_n` and `D_{k,n}`.
pub fn run_poisson_pp(config: &ExperimentConfig) -> Result<ExperimentReport> {
    run_kind(config, ExperimentKind::PoissonPp)
}

/// Hill estimator on window degrees.
pub fn run_hill_consistency(config: &ExperimentConfig) -> Result<ExperimentReport> {
    run_kind(config, ExperimentKind::HillConsistency)
}

/// Frequency of the ordering event.
pub fn run_ordering(config: &ExperimentConfig) -> Result<ExperimentReport> {
    run_kind(config, ExperimentKind::Ordering)
}

/// Coupling of models IV, V and the Poissonised Chung-Lu graph.
pub fn run_coupling(config: &ExperimentConfig) -> Result<ExperimentReport> {
    run_kind(config, ExperimentKind::Coupling)
}

/// Mismatches between large degrees and large weights.
pub fn run_weight_degree_correspondence(config: &ExperimentConfig) -> Result<ExperimentReport> {
    run_kind(config, ExperimentKind::WeightDegreeCorrespondence)
}

/// Log-log slope of the pooled degree tail.
pub fn run_degree_tail(config: &ExperimentConfig) -> Result<ExperimentReport> {
    run_kind(config, ExperimentKind::DegreeTail)
}

fn run_kind(config: &ExperimentConfig, kind: ExperimentKind) -> Result<ExperimentReport> {
    if config.kind != kind {
        return Err(Error::param("kind", format!("expected a {kind} config, got {}", config.kind)));
    }
    run_experiment(config)
}

fn columns(config: &ExperimentConfig) -> Vec<String> {
    let s = |v: &[&str]| v.iter().map(|c| c.to_string()).collect::<Vec<_>>();
    match config.kind {
        ExperimentKind::MaxDegree => s(&["window", "max_degree", "rescaled_max"]),
        ExperimentKind::PoissonPp => {
            let mut c: Vec<String> = config.intervals.iter().map(|i| format!("count_{}", i.label())).collect();
            if config.k_variant {
                c.push("k".into());
                c.extend(config.intervals.iter().map(|i| format!("kcount_{}", i.label())));
            }
            c
        }
        ExperimentKind::HillConsistency => {
            let mut c = s(&["k", "hill", "std_error", "failed"]);
            if config.hill_oracle {
                c.push("hill_weights".into());
            }
            c
        }
        ExperimentKind::Ordering => (1..=config.depth).map(|k| format!("a_{k}")).collect(),
        ExperimentKind::Coupling => s(&["a_n", "g1_ne_g3", "d_e", "k", "h1", "h2", "h3", "abs_h2_h3"]),
        ExperimentKind::WeightDegreeCorrespondence => config
            .thresholds
            .iter()
            .flat_map(|&a| [format!("big_degree_{}", fmt_num(a)), format!("big_weight_{}", fmt_num(a))])
            .collect(),
        ExperimentKind::DegreeTail => s(&["window", "max_degree", "mean_degree"]),
    }
}

/// Applies the truncation gate of models I and III to `model`: returns the
/// model, possibly with a wider buffer, and the expected number of missed
/// edges at the [`TRUNCATION_GATE_LEVEL`] weight quantile. Other models pass
/// through with `None`.
pub fn apply_gate(
    model: &ModelConfig,
    policy: GatePolicy,
    gate: f64,
    warnings: &mut Vec<String>,
) -> Result<(ModelConfig, Option<f64>)> {
    let mut model = model.clone();
    if !matches!(model.kind, ModelKind::Lattice | ModelKind::Continuum) {
        return Ok((model, None));
    }
    let w = model.weight.weight_quantile(TRUNCATION_GATE_LEVEL)?;
    let mut bias = estimate_truncation_bias(&model, w)?;
    if bias > gate {
        match policy {
            GatePolicy::Refuse => return Err(Error::TruncationBias { bias, gate }),
            GatePolicy::Warn => warnings.push(format!(
                "n = {}: expected missed edges {bias:.4} at the {TRUNCATION_GATE_LEVEL} weight quantile exceed {gate}",
                model.n
            )),
            GatePolicy::Auto => {
                model.buffer = Some(auto_buffer(&model, gate)?);
                bias = estimate_truncation_bias(&model, w)?;
            }
        }
    }
    Ok((model, Some(bias)))
}

/// Model at window size `n` with the buffer fixed by the gate policy, and
/// its reference constants.
fn prepare(
    config: &ExperimentConfig,
    thresholds: &Thresholds,
    n: u64,
    warnings: &mut Vec<String>,
) -> Result<(ModelConfig, Reference)> {
    let model = config.model.clone().with_n(n);
    let (model, bias) = apply_gate(&model, config.gate, thresholds.get("truncation_gate"), warnings)?;
    let buffer = bias.map(|_| model.buffer_width());
    let s: ScalingConstants = models::scaling_constants(&model)?;
    let k = intermediate_sequence(n.max(2), config.theta) as u64;
    let q_n_over_k = if k < n { Some(model.weight.quantile_q(s.p, n as f64 / k as f64)?) } else { None };
    let reference =
        Reference { n, p: s.p, gamma: s.gamma, xi: s.xi, q_n: s.q_n, k, q_n_over_k, buffer, truncation_bias: bias };
    Ok((model, reference))
}

struct Replication {
    values: Vec<f64>,
    /// Window degrees kept for pooled statistics.
    degrees: Vec<u64>,
}

fn hill_or_nan(degrees: &[u64], k: usize) -> f64 {
    crate::estimators::hill_degrees(degrees, k).map(|h| h.value).unwrap_or(f64::NAN)
}

/// Vertices with `D >= t >= xi W^p` and with `xi W^p >= t >= D`, where
/// `t = scale * a`.
pub fn mismatch_counts(degrees: &[u64], weights: &[f64], p: f64, xi: f64, threshold: f64) -> (u64, u64) {
    let mut big_degree = 0;
    let mut big_weight = 0;
    for (&d, &w) in degrees.iter().zip(weights) {
        let d = d as f64;
        let scaled = xi * w.powf(p);
        if d >= threshold && threshold >= scaled {
            big_degree += 1;
        }
        if scaled >= threshold && threshold >= d {
            big_weight += 1;
        }
    }
    (big_degree, big_weight)
}

fn replicate(config: &ExperimentConfig, model: &ModelConfig, r: &Reference, seed: u64) -> Result<Replication> {
    let n = r.n;
    let k = r.k as usize;
    if config.kind == ExperimentKind::Coupling {
        let t = generate_coupled(n as usize, &model.weight, seed)?;
        let h1 = hill_or_nan(&t.degrees_nr, k);
        let h2 = hill_or_nan(&t.degrees_cl, k);
        let h3 = hill_or_nan(&t.degrees_poisson_cl, k);
        let values = vec![
            f64::from(u8::from(t.a_n)),
            f64::from(u8::from(t.nr_differs)),
            t.d_e as f64,
            k as f64,
            h1,
            h2,
            h3,
            (h2 - h3).abs(),
        ];
        return Ok(Replication { values, degrees: Vec::new() });
    }
    let sample = generate(model, seed)?;
    let degrees = &sample.degrees;
    let scale = r.xi * r.q_n;
    let values = match config.kind {
        ExperimentKind::MaxDegree => {
            let m = sample.max_degree();
            vec![degrees.len() as f64, m as f64, m as f64 / scale]
        }
        ExperimentKind::PoissonPp => {
            let dn = RescaledDegrees::from_degrees(degrees, scale, 1.0, n as f64);
            let mut v = Vec::new();
            for i in &config.intervals {
                v.push(dn.count_interval(i.a, i.b)?);
            }
            if config.k_variant {
                v.push(k as f64);
                match r.q_n_over_k {
                    Some(q) => {
                        let dkn = RescaledDegrees::from_degrees(degrees, r.xi * q, 1.0 / k as f64, n as f64 / k as f64);
                        for i in &config.intervals {
                            v.push(dkn.count_interval(i.a, i.b)?);
                        }
                    }
                    None => v.extend(config.intervals.iter().map(|_| f64::NAN)),
                }
            }
            v
        }
        ExperimentKind::HillConsistency => {
            let mut v = match crate::estimators::hill_degrees(degrees, k) {
                Ok(h) => vec![k as f64, h.value, h.std_error, 0.0],
                Err(_) => vec![k as f64, f64::NAN, f64::NAN, 1.0],
            };
            if config.hill_oracle {
                let wp: Vec<f64> = sample.weights.iter().map(|w| w.powf(r.p)).collect();
                v.push(hill_estimate(&wp, k).map(|h| h.value).unwrap_or(f64::NAN));
            }
            v
        }
        ExperimentKind::Ordering => (1..=config.depth)
            .map(|d| f64::from(u8::from(kth_weight_has_kth_degree(&sample.weights, degrees, d))))
            .collect(),
        ExperimentKind::WeightDegreeCorrespondence => config
            .thresholds
            .iter()
            .flat_map(|&a| {
                let (bd, bw) = mismatch_counts(degrees, &sample.weights, r.p, r.xi, scale * a);
                [bd as f64, bw as f64]
            })
            .collect(),
        ExperimentKind::DegreeTail => {
            let total: u64 = degrees.iter().sum();
            let mean = if degrees.is_empty() { f64::NAN } else { total as f64 / degrees.len() as f64 };
            vec![degrees.len() as f64, sample.max_degree() as f64, mean]
        }
        ExperimentKind::Coupling => unreachable!("handled above"),
    };
    let keep = if config.kind == ExperimentKind::DegreeTail { sample.degrees } else { Vec::new() };
    Ok(Replication { values, degrees: keep })
}

/// Finite entries only.
fn finite(xs: Vec<f64>) -> Vec<f64> {
    xs.into_iter().filter(|x| x.is_finite()).collect()
}

/// Summary statistics of every column at every `n`, then per-kind
/// statistics. Depends on the rows and references only.
pub fn aggregate_rows(report: &ExperimentReport) -> Vec<Aggregate> {
    let c = &report.config;
    let mut out = Vec::new();
    let mut push = |n: Option<u64>, statistic: String, value: f64| out.push(Aggregate { n, statistic, value });
    for r in &report.references {
        let n = r.n;
        for name in &report.columns {
            let xs = finite(report.column(name, n));
            push(Some(n), format!("mean_{name}"), stats::mean(&xs));
            push(Some(n), format!("variance_{name}"), stats::variance(&xs));
            push(Some(n), format!("half_width95_{name}"), stats::half_width95(&xs));
        }
        match c.kind {
            ExperimentKind::MaxDegree => {
                let law = FrechetLaw { gamma: r.gamma };
                let xs = report.column("rescaled_max", n);
                push(Some(n), "ks".into(), ks_distance(&xs, |z| law.cdf(z)));
                push(Some(n), "ks_null_sd".into(), KOLMOGOROV_SD / (xs.len() as f64).sqrt());
            }
            ExperimentKind::PoissonPp => {
                for (idx, i) in c.intervals.iter().enumerate() {
                    let label = i.label();
                    let xs = report.column(&format!("count_{label}"), n);
                    let nu = nu_measure(r.gamma, i.a, i.b).unwrap_or(f64::NAN);
                    let m = stats::mean(&xs);
                    push(Some(n), format!("nu_{label}"), nu);
                    push(Some(n), format!("mean_over_nu_{label}"), m / nu);
                    push(Some(n), format!("dispersion_{label}"), stats::variance(&xs) / m);
                    for j in &c.intervals[idx + 1..] {
                        if i.disjoint(j) {
                            let ys = report.column(&format!("count_{}", j.label()), n);
                            let (cov, se) = stats::covariance_with_se(&xs, &ys);
                            push(Some(n), format!("cov_{label}_{}", j.label()), cov);
                            push(Some(n), format!("cov_se_{label}_{}", j.label()), se);
                        }
                    }
                    if c.k_variant {
                        let ks = finite(report.column(&format!("kcount_{label}"), n));
                        push(Some(n), format!("sd_kcount_{label}"), stats::std_dev(&ks));
                        push(Some(n), format!("mean_over_nu_kcount_{label}"), stats::mean(&ks) / nu);
                    }
                }
            }
            ExperimentKind::HillConsistency => {
                let target = 1.0 / r.gamma;
                let hs = finite(report.column("hill", n));
                push(Some(n), "target".into(), target);
                push(Some(n), "std_error_mean_hill".into(), stats::std_error(&hs));
                push(Some(n), "abs_bias_hill".into(), (stats::mean(&hs) - target).abs());
                push(Some(n), "excluded".into(), (c.replications - hs.len()) as f64);
                if c.hill_oracle {
                    let ws = finite(report.column("hill_weights", n));
                    push(Some(n), "abs_bias_hill_weights".into(), (stats::mean(&ws) - target).abs());
                }
            }
            ExperimentKind::Ordering => {
                for d in 1..=c.depth {
                    let xs = report.column(&format!("a_{d}"), n);
                    push(Some(n), format!("std_error_a_{d}"), stats::std_error(&xs));
                }
            }
            ExperimentKind::Coupling => {
                for name in ["g1_ne_g3", "d_e", "abs_h2_h3"] {
                    let xs = finite(report.column(name, n));
                    push(Some(n), format!("std_error_{name}"), stats::std_error(&xs));
                }
                let h = finite(report.column("abs_h2_h3", n));
                push(Some(n), "excluded".into(), (c.replications - h.len()) as f64);
            }
            ExperimentKind::WeightDegreeCorrespondence => {
                for name in &report.columns {
                    let xs = report.column(name, n);
                    push(Some(n), format!("std_error_{name}"), stats::std_error(&xs));
                }
            }
            ExperimentKind::DegreeTail => {}
        }
    }
    if c.kind == ExperimentKind::Coupling && c.sweep.len() > 1 {
        let ns: Vec<f64> = report.rows.iter().map(|r| r.n as f64).collect();
        let j = report.column_index("d_e").expect("d_e column");
        let de: Vec<f64> = report.rows.iter().map(|r| r.values[j]).collect();
        let (rho, p) = stats::spearman_increasing_p(&ns, &de);
        push(None, "d_e_trend_rho".into(), rho);
        push(None, "d_e_trend_p".into(), p);
    }
    out
}

fn pooled_statistics(report: &ExperimentReport, pooled: &[Vec<u64>]) -> Vec<Aggregate> {
    let mut out = Vec::new();
    if report.config.kind != ExperimentKind::DegreeTail {
        return out;
    }
    for (r, degrees) in report.references.iter().zip(pooled) {
        let xs: Vec<f64> = degrees.iter().map(|&d| d as f64).collect();
        let slope = tail_slope(&xs, report.config.tail_fraction).unwrap_or(f64::NAN);
        out.push(Aggregate { n: Some(r.n), statistic: "pooled_slope".into(), value: slope });
        out.push(Aggregate { n: Some(r.n), statistic: "pooled_size".into(), value: degrees.len() as f64 });
        out.push(Aggregate { n: Some(r.n), statistic: "abs_slope_error".into(), value: (slope + r.gamma).abs() });
    }
    out
}

struct CheckBuilder<'a> {
    report: &'a ExperimentReport,
    checks: Vec<Check>,
}

impl CheckBuilder<'_> {
    fn agg(&self, n: u64, statistic: &str) -> f64 {
        self.report.aggregate(Some(n), statistic).unwrap_or(f64::NAN)
    }

    fn bounded(
        &mut self,
        name: &str,
        n: Option<u64>,
        observed: f64,
        lower: Option<(&str, f64)>,
        upper: Option<(&str, f64)>,
    ) {
        let lo_ok = lower.is_none_or(|(_, l)| observed >= l);
        let hi_ok = upper.is_none_or(|(_, u)| observed <= u);
        let calibration = lower.iter().chain(upper.iter()).map(|(k, _)| k.to_string()).collect();
        self.checks.push(Check {
            name: name.into(),
            n,
            observed,
            lower: lower.map(|l| l.1),
            upper: upper.map(|u| u.1),
            passed: observed.is_finite() && lo_ok && hi_ok,
            calibration,
            note: None,
        });
    }

    /// `statistic` nonincreasing (or nondecreasing) along the sweep, allowing
    /// `slack` standard errors of each successive difference. The check
    /// records the largest violation in standard errors.
    fn monotone(&mut self, name: &str, statistic: &str, se_statistic: Option<&str>, increasing: bool, key: &str) {
        let slack = self.report.thresholds.get(key);
        let ns = &self.report.config.sweep;
        let mut worst = f64::NEG_INFINITY;
        for w in ns.windows(2) {
            let (a, b) = (self.agg(w[0], statistic), self.agg(w[1], statistic));
            let step = if increasing { a - b } else { b - a };
            let se = match se_statistic {
                Some(s) => self.agg(w[0], s).hypot(self.agg(w[1], s)),
                None => 1.0,
            };
            let z = if se > 0.0 {
                step / se
            } else if step > 0.0 {
                f64::INFINITY
            } else {
                0.0
            };
            worst = worst.max(z);
        }
        if ns.len() < 2 {
            return;
        }
        self.bounded(name, None, worst, None, Some((key, slack)));
        if se_statistic.is_some() {
            self.require_replications();
        }
    }

    /// Marks the last check failed when too few replications back a normal
    /// approximation.
    fn require_replications(&mut self) {
        if self.report.config.replications < MIN_REPLICATIONS_FOR_CI {
            if let Some(c) = self.checks.last_mut() {
                c.passed = false;
                c.note = Some(format!("needs at least {MIN_REPLICATIONS_FOR_CI} replications"));
            }
        }
    }
}

fn evaluate_checks(report: &ExperimentReport) -> Vec<Check> {
    let c = &report.config;
    let t = &report.thresholds;
    let last = *c.sweep.last().expect("nonempty sweep");
    let mut b = CheckBuilder { report, checks: Vec::new() };
    match c.kind {
        ExperimentKind::MaxDegree => {
            let ks = b.agg(last, "ks");
            b.bounded("ks_at_largest_n", Some(last), ks, None, Some(("ks_max", t.get("ks_max"))));
            b.monotone("ks_nonincreasing", "ks", Some("ks_null_sd"), false, "monotone_se");
        }
        ExperimentKind::PoissonPp => {
            let first = c.intervals[0];
            let label = first.label();
            let lo = ("mean_ratio_lo", t.get("mean_ratio_lo"));
            let hi = ("mean_ratio_hi", t.get("mean_ratio_hi"));
            let m = b.agg(last, &format!("mean_over_nu_{label}"));
            b.bounded(&format!("mean_over_nu_{label}"), Some(last), m, Some(lo), Some(hi));
            b.require_replications();
            let d = b.agg(last, &format!("dispersion_{label}"));
            let dlo = ("dispersion_lo", t.get("dispersion_lo"));
            let dhi = ("dispersion_hi", t.get("dispersion_hi"));
            b.bounded(&format!("dispersion_{label}"), Some(last), d, Some(dlo), Some(dhi));
            b.require_replications();
            for (idx, i) in c.intervals.iter().enumerate() {
                for j in &c.intervals[idx + 1..] {
                    if i.disjoint(j) {
                        let pair = format!("{}_{}", i.label(), j.label());
                        let cov = b.agg(last, &format!("cov_{pair}"));
                        let se = b.agg(last, &format!("cov_se_{pair}"));
                        let z = (cov / se).abs();
                        b.bounded(
                            &format!("cov_z_{pair}"),
                            Some(last),
                            z,
                            None,
                            Some(("cov_z_max", t.get("cov_z_max"))),
                        );
                        b.require_replications();
                    }
                }
            }
            if c.k_variant {
                let sd = b.agg(last, &format!("sd_kcount_{label}"));
                b.bounded(
                    &format!("sd_kcount_{label}"),
                    Some(last),
                    sd,
                    None,
                    Some(("kcount_sd_max", t.get("kcount_sd_max"))),
                );
                let m = b.agg(last, &format!("mean_over_nu_kcount_{label}"));
                b.bounded(&format!("mean_over_nu_kcount_{label}"), Some(last), m, Some(lo), Some(hi));
                b.require_replications();
            }
        }
        ExperimentKind::HillConsistency => {
            let max = ("hill_bias_max", t.get("hill_bias_max"));
            let bias = b.agg(last, "abs_bias_hill");
            b.bounded("abs_bias_hill", Some(last), bias, None, Some(max));
            if c.hill_oracle {
                let bias = b.agg(last, "abs_bias_hill_weights");
                b.bounded("abs_bias_hill_weights", Some(last), bias, None, Some(max));
            }
            b.monotone("abs_bias_nonincreasing", "abs_bias_hill", Some("std_error_mean_hill"), false, "monotone_se");
        }
        ExperimentKind::Ordering => {
            let freq = b.agg(last, "mean_a_1");
            b.bounded("frequency_a_1", Some(last), freq, Some(("ordering_min", t.get("ordering_min"))), None);
            b.monotone("frequency_nondecreasing", "mean_a_1", Some("std_error_a_1"), true, "monotone_se");
            let slack = t.get("monotone_se");
            for d in 2..=c.depth {
                for &n in &c.sweep {
                    let f1 = b.agg(n, "mean_a_1");
                    let fd = b.agg(n, &format!("mean_a_{d}"));
                    let se = b.agg(n, "std_error_a_1").hypot(b.agg(n, &format!("std_error_a_{d}")));
                    let z = if se > 0.0 {
                        (fd - f1) / se
                    } else if fd > f1 {
                        f64::INFINITY
                    } else {
                        0.0
                    };
                    b.bounded(&format!("a_{d}_not_above_a_1"), Some(n), z, None, Some(("monotone_se", slack)));
                    b.require_replications();
                }
            }
        }
        ExperimentKind::Coupling => {
            let freq = b.agg(last, "mean_g1_ne_g3");
            b.bounded("frequency_g1_ne_g3", Some(last), freq, None, Some(("differ_max", t.get("differ_max"))));
            b.monotone("g1_ne_g3_nonincreasing", "mean_g1_ne_g3", Some("std_error_g1_ne_g3"), false, "monotone_se");
            if let Some(p) = report.aggregate(None, "d_e_trend_p") {
                b.bounded("d_e_no_increasing_trend", None, p, Some(("trend_level", t.get("trend_level"))), None);
            }
            let gap = b.agg(last, "mean_abs_h2_h3");
            b.bounded("mean_abs_h2_h3", Some(last), gap, None, Some(("hill_gap_max", t.get("hill_gap_max"))));
        }
        ExperimentKind::WeightDegreeCorrespondence => {
            for &a in &c.thresholds {
                for side in ["big_degree", "big_weight"] {
                    let col = format!("{side}_{}", fmt_num(a));
                    let m = b.agg(last, &format!("mean_{col}"));
                    b.bounded(
                        &format!("mean_{col}"),
                        Some(last),
                        m,
                        None,
                        Some(("mismatch_max", t.get("mismatch_max"))),
                    );
                    b.monotone(
                        &format!("{col}_nonincreasing"),
                        &format!("mean_{col}"),
                        Some(&format!("std_error_{col}")),
                        false,
                        "monotone_se",
                    );
                }
            }
        }
        ExperimentKind::DegreeTail => {
            let err = b.agg(last, "abs_slope_error");
            b.bounded("abs_slope_error", Some(last), err, None, Some(("slope_tol", t.get("slope_tol"))));
        }
    }
    b.checks
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::WeightDistribution;
    use proptest::prelude::*;

    fn nr(beta: f64, n: u64) -> ModelConfig {
        ModelConfig::new(ModelKind::NorrosReittu, WeightDistribution::pareto(beta, 1.0).unwrap(), n)
    }

    #[test]
    fn split_stream_is_deterministic_and_collision_free() {
        assert_eq!(split_stream(7, 3), split_stream(7, 3));
        let mut seen: Vec<u64> = (0..1_000_000).map(|i| split_stream(12345, i)).collect();
        seen.sort_unstable();
        seen.dedup();
        assert_eq!(seen.len(), 1_000_000);
    }

    #[test]
    fn split_stream_avalanche() {
        let mut rng = models::rng_from_seed(1);
        let trials = 10_000;
        let mut flips = 0u64;
        for t in 0..trials {
            let m: u64 = rand::Rng::gen(&mut rng);
            let i: u64 = rand::Rng::gen(&mut rng);
            let bit = 1u64 << (t % 64);
            let (m2, i2) = if t % 2 == 0 { (m ^ bit, i) } else { (m, i ^ bit) };
            flips += u64::from((split_stream(m, i) ^ split_stream(m2, i2)).count_ones());
        }
        let avg = flips as f64 / trials as f64;
        assert!((avg - 32.0).abs() < 0.5, "{avg}");
    }

    #[test]
    fn interval_parsing_and_labels() {
        let i: Interval = "(1, inf]".parse().unwrap();
        assert_eq!(i, Interval { a: 1.0, b: f64::INFINITY });
        assert_eq!(i.label(), "1_inf");
        assert_eq!(i.to_string(), "(1,inf]");
        assert!("(0,1]".parse::<Interval>().is_err());
        assert!("[1,2]".parse::<Interval>().is_err());
        assert!(Interval::new(1.0, 2.0).unwrap().disjoint(&Interval::new(2.0, 3.0).unwrap()));
        let json = serde_json::to_string(&i).unwrap();
        assert_eq!(json, r#"{"a":1.0,"b":null}"#);
        assert_eq!(serde_json::from_str::<Interval>(&json).unwrap(), i);
    }

    #[test]
    fn kind_names_round_trip() {
        for k in ExperimentKind::ALL {
            assert_eq!(k.name().parse::<ExperimentKind>().unwrap(), k);
            assert_eq!(serde_json::to_string(&k).unwrap(), format!("\"{}\"", k.name()));
        }
    }

    #[test]
    fn single_replication_ks() {
        let cfg = ExperimentConfig::new(ExperimentKind::MaxDegree, nr(2.0, 1000), 1, 3);
        let rep = run_max_degree(&cfg).unwrap();
        assert_eq!(rep.rows.len(), 1);
        let v = rep.rows[0].values[2];
        let f = crate::estimators::frechet_cdf(2.0, v);
        assert!((rep.aggregate(Some(1000), "ks").unwrap() - f.max(1.0 - f)).abs() < 1e-15);
    }

    #[test]
    fn single_vertex_ordering_frequency_is_one() {
        let cfg = ExperimentConfig::new(ExperimentKind::Ordering, nr(1.5, 1), 5, 3);
        let rep = run_ordering(&cfg).unwrap();
        assert_eq!(rep.aggregate(Some(1), "mean_a_1"), Some(1.0));
    }

    #[test]
    fn mismatch_counts_on_exact_degrees() {
        let weights: Vec<f64> = (1..=10).map(f64::from).collect();
        let degrees: Vec<u64> = (1..=10).collect();
        for &t in &[0.5, 3.5, 9.9, 11.0] {
            assert_eq!(mismatch_counts(&degrees, &weights, 1.0, 1.0, t), (0, 0));
        }
        // At a threshold hit exactly, the vertex sits in both sets.
        assert_eq!(mismatch_counts(&degrees, &weights, 1.0, 1.0, 4.0), (1, 1));
        // Huge thresholds leave nothing to count.
        assert_eq!(mismatch_counts(&[5, 7], &[100.0, 2.0], 1.0, 1.0, 1e9), (0, 0));
        assert_eq!(mismatch_counts(&[50, 7], &[10.0, 20.0], 1.0, 1.0, 15.0), (1, 1));
    }

    #[test]
    fn reference_gamma_follows_the_model() {
        let m = ModelConfig::new(ModelKind::Lattice, WeightDistribution::pareto(1.0, 1.0).unwrap(), 100);
        let cfg = ExperimentConfig::new(ExperimentKind::MaxDegree, m, 2, 1).with_gate(GatePolicy::Warn);
        let rep = run_experiment(&cfg).unwrap();
        assert_eq!(rep.references[0].gamma, 2.0);
        assert!(!rep.warnings.is_empty());
        let refuse = cfg.clone().with_gate(GatePolicy::Refuse);
        assert!(matches!(run_experiment(&refuse), Err(Error::TruncationBias { .. })));
    }

    #[test]
    fn parallel_and_serial_rows_agree() {
        for kind in ExperimentKind::ALL {
            let model = if kind == ExperimentKind::Coupling { nr(3.0, 300) } else { nr(2.0, 300) };
            let cfg = ExperimentConfig::new(kind, model, 6, 11).with_sweep(vec![100, 300]).with_depth(2);
            let one = run_experiment(&cfg.clone().with_workers(1)).unwrap();
            let four = run_experiment(&cfg.with_workers(4)).unwrap();
            assert_eq!(one.to_csv(), four.to_csv(), "{kind}");
            assert_eq!(one.to_json(), four.to_json(), "{kind}");
        }
    }

    #[test]
    fn aggregates_are_recomputable_from_rows() {
        let cfg = ExperimentConfig::new(ExperimentKind::PoissonPp, nr(2.0, 2000), 40, 5);
        let rep = run_poisson_pp(&cfg).unwrap();
        for name in &rep.columns {
            let xs = rep.column(name, 2000);
            let m = xs.iter().sum::<f64>() / xs.len() as f64;
            let got = rep.aggregate(Some(2000), &format!("mean_{name}")).unwrap();
            assert!((got - m).abs() <= 1e-12 * m.abs().max(1.0), "{name}");
        }
        let xs = rep.column("count_1_inf", 2000);
        let m = xs.iter().sum::<f64>() / 40.0;
        let v = xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / 39.0;
        assert!((rep.aggregate(Some(2000), "dispersion_1_inf").unwrap() - v / m).abs() < 1e-12);
    }

    #[test]
    fn experiment_config_rejects_bad_sweeps() {
        let base = ExperimentConfig::new(ExperimentKind::MaxDegree, nr(2.0, 10), 1, 1);
        assert!(base.clone().with_sweep(vec![10, 10]).check().is_err());
        assert!(base.clone().with_sweep(vec![]).check().is_err());
        let mut zero = base.clone();
        zero.replications = 0;
        assert!(zero.check().is_err());
        let mut unknown = base;
        unknown.assert.insert("no_such_key".into(), 1.0);
        assert!(unknown.check().is_err());
    }

    #[test]
    fn report_round_trips_through_json() {
        let cfg = ExperimentConfig::new(ExperimentKind::HillConsistency, nr(3.0, 1000), 3, 8);
        let rep = run_hill_consistency(&cfg).unwrap();
        let back: ExperimentReport = serde_json::from_str(&rep.to_json()).unwrap();
        assert_eq!(back.config, rep.config);
        let again = run_experiment(&back.config).unwrap();
        assert_eq!(again.to_csv(), rep.to_csv());
    }

    #[test]
    fn calibration_covers_every_threshold_used() {
        let t = Thresholds::resolve(&BTreeMap::new()).unwrap();
        for key in [
            "ks_max",
            "mean_ratio_lo",
            "mean_ratio_hi",
            "dispersion_lo",
            "dispersion_hi",
            "cov_z_max",
            "kcount_sd_max",
            "hill_bias_max",
            "monotone_se",
            "ordering_min",
            "differ_max",
            "trend_level",
            "hill_gap_max",
            "mismatch_max",
            "slope_tol",
            "truncation_gate",
        ] {
            assert!(t.get(key).is_finite(), "{key}");
        }
    }

    proptest! {
        #[test]
        fn split_stream_is_injective_in_index(m in any::<u64>(), i in any::<u64>(), j in any::<u64>()) {
            prop_assume!(i != j);
            prop_assert_ne!(split_stream(m, i), split_stream(m, j));
        }
    }
}
