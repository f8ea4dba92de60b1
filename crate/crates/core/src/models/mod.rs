//! Graph models, their scaling constants and degree extraction.
//!
//! | kind | vertices                         | edge law between `x` and `y`                    |
//! |------|----------------------------------|-------------------------------------------------|
//! | I    | `Z^d`                            | `1 - exp(-lambda W_x W_y / |x-y|^alpha)`        |
//! | II   | `Z^d`, `W = U^(-1/beta)`         | `1{min(W_x, W_y) >= |x-y|}`                     |
//! | III  | unit-rate Poisson process        | as model I                                      |
//! | IV   | `{1..n}`                         | `Poisson(W_x W_y / L_n)` multi-edges, loops too |
//! | V    | `{1..n}`                         | `Bernoulli(min(W_x W_y / L_n, 1))`, loops too   |
//!
//! `L_n` is the total weight of the `n` vertices. A self-loop adds one to
//! the degree of its vertex.
//!
//! Degrees are measured for the vertices of the observation window: the
//! first `n` points of `{0..m-1}^d` in lexicographic order for the lattice
//! models (`m` the smallest integer with `m^d >= n`), the cube
//! `[0, n^(1/d)]^d` for model III and all of `{1..n}` for models IV and V.
//! Models I and III are infinite graphs; they are simulated on the window
//! enlarged by a buffer `B` on every side, see [`estimate_truncation_bias`].
//! Model II is simulated exactly: every vertex that can reach the window is
//! generated.

mod bias;
mod coupled;
mod edges;
mod rank1;
mod spatial;
mod ultrasmall;

use std::fmt;
use std::str::FromStr;

use rand::SeedableRng;
use rand_pcg::Pcg64Mcg;
use serde::{Deserialize, Serialize};
use statrs::function::gamma::gamma;

use crate::error::{Error, Result};
use crate::weights::WeightDistribution;

pub use bias::{auto_buffer, estimate_truncation_bias, TRUNCATION_GATE, TRUNCATION_GATE_LEVEL};
pub use coupled::{
    bernoulli_poisson_coupling, couple_on_weights, coupling_mean_mismatch, generate_coupled, CoupledTriple,
};
pub use edges::{write_edge_list, Edge, EdgeList, VertexLabel};
pub use rank1::{sample_rank1_edges, total_weight};
pub use spatial::SpatialVertices;

/// Largest supported lattice or space dimension.
pub const MAX_DIM: usize = 3;

/// Default cap on the expected number of simulated vertices.
pub const DEFAULT_MAX_VERTICES: u64 = 50_000_000;

/// The generator behind every replication stream.
pub type Rng64 = Pcg64Mcg;

/// A fresh stream for `seed`.
pub fn rng_from_seed(seed: u64) -> Rng64 {
    Pcg64Mcg::seed_from_u64(seed)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ModelKind {
    /// Scale-free percolation on the lattice.
    #[serde(rename = "I")]
    Lattice,
    /// Ultra-small scale-free geometric network.
    #[serde(rename = "II")]
    UltraSmall,
    /// Heterogeneous random connection model.
    #[serde(rename = "III")]
    Continuum,
    #[serde(rename = "IV")]
    NorrosReittu,
    #[serde(rename = "V")]
    ChungLu,
}

impl ModelKind {
    pub const ALL: [ModelKind; 5] =
        [ModelKind::Lattice, ModelKind::UltraSmall, ModelKind::Continuum, ModelKind::NorrosReittu, ModelKind::ChungLu];

    pub fn roman(self) -> &'static str {
        match self {
            Self::Lattice => "I",
            Self::UltraSmall => "II",
            Self::Continuum => "III",
            Self::NorrosReittu => "IV",
            Self::ChungLu => "V",
        }
    }

    /// Models I-III live in space and have a dimension.
    pub fn is_spatial(self) -> bool {
        matches!(self, Self::Lattice | Self::UltraSmall | Self::Continuum)
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.roman())
    }
}

impl FromStr for ModelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let kind = match s.trim().to_ascii_lowercase().as_str() {
            "i" | "1" | "lattice" | "sfp" => Self::Lattice,
            "ii" | "2" | "ultrasmall" | "ultra-small" => Self::UltraSmall,
            "iii" | "3" | "continuum" | "rcm" => Self::Continuum,
            "iv" | "4" | "norros-reittu" | "nr" => Self::NorrosReittu,
            "v" | "5" | "chung-lu" | "cl" => Self::ChungLu,
            other => return Err(Error::param("model", format!("unknown model `{other}`"))),
        };
        Ok(kind)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GeneratorMode {
    /// Every candidate pair gets its own draw.
    Naive,
    #[default]
    Fast,
}

impl fmt::Display for GeneratorMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Naive => "naive",
            Self::Fast => "fast",
        })
    }
}

impl FromStr for GeneratorMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "naive" => Ok(Self::Naive),
            "fast" => Ok(Self::Fast),
            other => Err(Error::param("mode", format!("expected naive or fast, got `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelConfig {
    pub kind: ModelKind,
    /// Dimension of models I-III; ignored by IV and V.
    pub dim: usize,
    pub alpha: f64,
    pub lambda: f64,
    pub weight: WeightDistribution,
    /// Window size: the (expected) number of window vertices.
    pub n: u64,
    /// Buffer width around the window for models I and III. `None` means
    /// `n^(1/d)`.
    pub buffer: Option<f64>,
    pub mode: GeneratorMode,
    pub max_vertices: u64,
}

impl ModelConfig {
    /// Config with `d = 1`, `alpha = 2`, `lambda = 1`, the default buffer and
    /// the fast generator.
    pub fn new(kind: ModelKind, weight: WeightDistribution, n: u64) -> Self {
        Self {
            kind,
            dim: 1,
            alpha: 2.0,
            lambda: 1.0,
            weight,
            n,
            buffer: None,
            mode: GeneratorMode::Fast,
            max_vertices: DEFAULT_MAX_VERTICES,
        }
    }

    pub fn with_dim(mut self, dim: usize) -> Self {
        self.dim = dim;
        self
    }

    pub fn with_alpha(mut self, alpha: f64) -> Self {
        self.alpha = alpha;
        self
    }

    pub fn with_lambda(mut self, lambda: f64) -> Self {
        self.lambda = lambda;
        self
    }

    pub fn with_buffer(mut self, buffer: f64) -> Self {
        self.buffer = Some(buffer);
        self
    }

    pub fn with_mode(mut self, mode: GeneratorMode) -> Self {
        self.mode = mode;
        self
    }

    pub fn with_n(mut self, n: u64) -> Self {
        self.n = n;
        self
    }

    /// Dimension that applies to this kind (0 for models IV and V).
    pub fn effective_dim(&self) -> usize {
        if self.kind.is_spatial() {
            self.dim
        } else {
            0
        }
    }

    /// Side length `n^(1/d)` of the continuum window.
    pub fn window_side(&self) -> f64 {
        (self.n as f64).powf(1.0 / self.dim as f64)
    }

    /// Buffer in effect for models I and III.
    pub fn buffer_width(&self) -> f64 {
        self.buffer.unwrap_or_else(|| self.window_side())
    }

    /// Number of points per axis of the lattice box holding the window.
    pub fn lattice_side(&self) -> u64 {
        lattice_side(self.n, self.dim)
    }

    /// Expected number of vertices the generator materialises.
    pub fn expected_vertices(&self) -> f64 {
        let d = self.dim as i32;
        match self.kind {
            ModelKind::Lattice => {
                let b = self.buffer_width().floor();
                (self.lattice_side() as f64 + 2.0 * b).powi(d)
            }
            ModelKind::Continuum => (self.window_side() + 2.0 * self.buffer_width()).powi(d),
            ModelKind::UltraSmall | ModelKind::NorrosReittu | ModelKind::ChungLu => self.n as f64,
        }
    }

    /// Fails with [`Error::MemoryGuard`] when the expected vertex count is
    /// above `max_vertices`.
    pub fn check_memory(&self) -> Result<()> {
        let expected = self.expected_vertices();
        if expected > self.max_vertices as f64 {
            return Err(Error::MemoryGuard { expected, cap: self.max_vertices });
        }
        Ok(())
    }
}

/// Smallest `m` with `m^d >= n`.
pub fn lattice_side(n: u64, dim: usize) -> u64 {
    let mut m = ((n as f64).powf(1.0 / dim as f64).round() as u64).max(1);
    while m > 1 && (m - 1).checked_pow(dim as u32).is_some_and(|v| v >= n) {
        m -= 1;
    }
    while m.checked_pow(dim as u32).is_some_and(|v| v < n) {
        m += 1;
    }
    m
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ConstraintStatus {
    Satisfied,
    Violated,
    /// Simulation is fine, but the limit theorems are not proven here.
    OutsideProvenRegime,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConstraintCheck {
    pub constraint: String,
    pub status: ConstraintStatus,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct ValidationReport {
    pub checks: Vec<ConstraintCheck>,
}

impl ValidationReport {
    fn push(&mut self, constraint: impl Into<String>, ok: bool, failure: ConstraintStatus) {
        let status = if ok { ConstraintStatus::Satisfied } else { failure };
        self.checks.push(ConstraintCheck { constraint: constraint.into(), status });
    }

    /// True when nothing is [`ConstraintStatus::Violated`].
    pub fn is_valid(&self) -> bool {
        self.violations().next().is_none()
    }

    pub fn violations(&self) -> impl Iterator<Item = &ConstraintCheck> {
        self.checks.iter().filter(|c| c.status == ConstraintStatus::Violated)
    }

    pub fn outside_proven_regime(&self) -> bool {
        self.checks.iter().any(|c| c.status == ConstraintStatus::OutsideProvenRegime)
    }

    /// First violation as an error.
    pub fn into_result(self) -> Result<Self> {
        let first = self.violations().next().map(|c| c.constraint.clone());
        match first {
            Some(constraint) => Err(Error::InvalidRegime { constraint }),
            None => Ok(self),
        }
    }
}

/// Lists every constraint on `config` with its status.
pub fn validate(config: &ModelConfig) -> ValidationReport {
    use ConstraintStatus::{OutsideProvenRegime, Violated};
    let mut report = ValidationReport::default();
    let beta = config.weight.beta();
    let d = config.dim as f64;
    report.push("n >= 1", config.n >= 1, Violated);
    if config.kind.is_spatial() {
        report.push(format!("1 <= d <= {MAX_DIM}"), (1..=MAX_DIM).contains(&config.dim), Violated);
    }
    match config.kind {
        ModelKind::Lattice | ModelKind::Continuum => {
            report.push("alpha > 0", config.alpha.is_finite() && config.alpha > 0.0, Violated);
            report.push("lambda > 0", config.lambda.is_finite() && config.lambda > 0.0, Violated);
            report.push("buffer >= 0", config.buffer.is_none_or(|b| b.is_finite() && b >= 0.0), Violated);
            report.push("d < alpha", d < config.alpha, Violated);
            report.push("d < alpha * beta", d < config.alpha * beta, Violated);
        }
        ModelKind::UltraSmall => {
            report.push(
                "weight = invuniform",
                matches!(config.weight, WeightDistribution::InverseUniform { .. }),
                Violated,
            );
            report.push("beta < d", beta < d, Violated);
        }
        ModelKind::NorrosReittu => {}
        ModelKind::ChungLu => report.push("beta > 2", beta > 2.0, OutsideProvenRegime),
    }
    report
}

/// Constants `(p, gamma, xi)` that turn degrees into the Frechet scale,
/// together with `q(n)` and the unit-ball volume.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScalingConstants {
    pub p: f64,
    pub gamma: f64,
    pub xi: f64,
    pub q_n: f64,
    pub v_d: f64,
}

/// Volume of the Euclidean unit ball in dimension `d`.
pub fn unit_ball_volume(d: usize) -> f64 {
    let half = d as f64 / 2.0;
    std::f64::consts::PI.powf(half) / gamma(half + 1.0)
}

/// Scaling constants of `config`; fails when the regime is invalid.
pub fn scaling_constants(config: &ModelConfig) -> Result<ScalingConstants> {
    validate(config).into_result()?;
    let beta = config.weight.beta();
    let d = config.dim as f64;
    let (p, xi, v_d) = match config.kind {
        ModelKind::Lattice | ModelKind::Continuum => {
            let p = d / config.alpha;
            let v_d = unit_ball_volume(config.dim);
            let xi = config.lambda.powf(p) * v_d * gamma(1.0 - p) * config.weight.moment(p);
            (p, xi, v_d)
        }
        ModelKind::UltraSmall => {
            let v_d = unit_ball_volume(config.dim);
            (d - beta, d * v_d / (d - beta), v_d)
        }
        ModelKind::NorrosReittu | ModelKind::ChungLu => (1.0, 1.0, 1.0),
    };
    let q_n = config.weight.quantile_q(p, config.n as f64)?;
    Ok(ScalingConstants { p, gamma: beta / p, xi, q_n, v_d })
}

/// Geometry or global context of a pair, as needed by [`edge_probability`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PairContext {
    /// Models I-III: Euclidean distance between the two vertices.
    Spatial { distance: f64 },
    /// Models IV and V: total weight `L_n`.
    Rank1 { total_weight: f64 },
}

/// Law of the number of edges between two vertices.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum EdgeLaw {
    /// Probability of a single edge.
    Probability(f64),
    /// Mean of a Poisson number of edges (model IV); may exceed 1.
    Intensity(f64),
}

impl EdgeLaw {
    /// Probability of at least one edge.
    pub fn connection_probability(self) -> f64 {
        match self {
            Self::Probability(p) => p,
            Self::Intensity(mu) => -(-mu).exp_m1(),
        }
    }

    /// Expected number of edges.
    pub fn mean(self) -> f64 {
        match self {
            Self::Probability(p) => p,
            Self::Intensity(mu) => mu,
        }
    }
}

/// Edge law between two vertices of weights `w_x`, `w_y`.
pub fn edge_probability(config: &ModelConfig, w_x: f64, w_y: f64, context: PairContext) -> Result<EdgeLaw> {
    match (config.kind, context) {
        (ModelKind::Lattice | ModelKind::Continuum | ModelKind::UltraSmall, PairContext::Spatial { distance }) => {
            if !(distance > 0.0) {
                return Err(Error::param("r", format!("distinct vertices need r > 0, got {distance}")));
            }
            if config.kind == ModelKind::UltraSmall {
                let linked = w_x.min(w_y) >= distance;
                return Ok(EdgeLaw::Probability(if linked { 1.0 } else { 0.0 }));
            }
            let h = config.lambda * w_x * w_y * distance.powf(-config.alpha);
            Ok(EdgeLaw::Probability(-(-h).exp_m1()))
        }
        (ModelKind::NorrosReittu | ModelKind::ChungLu, PairContext::Rank1 { total_weight }) => {
            if !(total_weight > 0.0) {
                return Err(Error::param("total_weight", "must be positive"));
            }
            let mu = w_x * w_y / total_weight;
            Ok(if config.kind == ModelKind::NorrosReittu {
                EdgeLaw::Intensity(mu)
            } else {
                EdgeLaw::Probability(mu.min(1.0))
            })
        }
        (kind, _) => Err(Error::param("context", format!("wrong pair context for model {kind}"))),
    }
}

/// Degrees of the window vertices of one replication.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DegreeSample {
    pub config: ModelConfig,
    pub seed: u64,
    /// Coordinates per window vertex, `dim` values each; empty for IV and V.
    pub positions: Vec<f64>,
    pub weights: Vec<f64>,
    pub degrees: Vec<u64>,
    /// `None` when the configuration is outside the regime where the
    /// constants exist.
    pub scaling: Option<ScalingConstants>,
    /// Number of vertices the generator materialised, window included.
    pub simulated_vertices: u64,
    /// Buffer width used (models I and III).
    pub buffer: Option<f64>,
}

impl DegreeSample {
    /// `|Delta_n|`.
    pub fn window_count(&self) -> usize {
        self.degrees.len()
    }

    pub fn position(&self, i: usize) -> &[f64] {
        let d = self.config.effective_dim();
        &self.positions[i * d..(i + 1) * d]
    }

    pub fn scaling(&self) -> Result<ScalingConstants> {
        self.scaling.ok_or_else(|| Error::InvalidRegime {
            constraint: format!("scaling constants for model {}", self.config.kind),
        })
    }

    pub fn max_degree(&self) -> u64 {
        self.degrees.iter().copied().max().unwrap_or(0)
    }
}

fn check_generatable(config: &ModelConfig) -> Result<Option<ScalingConstants>> {
    let report = validate(config);
    for c in report.violations() {
        // Only the structural constraints block simulation.
        let blocking = c.constraint.starts_with("n >=")
            || c.constraint.starts_with("1 <= d")
            || c.constraint.starts_with("alpha >")
            || c.constraint.starts_with("lambda >")
            || c.constraint.starts_with("buffer")
            || c.constraint.starts_with("weight =");
        if blocking {
            return Err(Error::InvalidRegime { constraint: c.constraint.clone() });
        }
    }
    if config.kind == ModelKind::UltraSmall && config.weight.beta() >= config.dim as f64 {
        // Every ring of the lattice would contribute; the graph is not
        // locally finite in expectation.
        return Err(Error::InvalidRegime { constraint: "beta < d".into() });
    }
    config.check_memory()?;
    Ok(scaling_constants(config).ok())
}

/// One replication: the degree of every window vertex.
pub fn generate(config: &ModelConfig, seed: u64) -> Result<DegreeSample> {
    generate_inner(config, seed, None)
}

/// As [`generate`], also returning every edge with at least one window
/// endpoint.
pub fn generate_with_edges(config: &ModelConfig, seed: u64) -> Result<(DegreeSample, EdgeList)> {
    let mut edges = EdgeList::new(config.effective_dim());
    let sample = generate_inner(config, seed, Some(&mut edges))?;
    Ok((sample, edges))
}

fn generate_inner(config: &ModelConfig, seed: u64, edges: Option<&mut EdgeList>) -> Result<DegreeSample> {
    let scaling = check_generatable(config)?;
    let mut rng = rng_from_seed(seed);
    let out = match config.kind {
        ModelKind::Lattice | ModelKind::Continuum => spatial::generate(config, &mut rng, edges)?,
        ModelKind::UltraSmall => ultrasmall::generate(config, seed, &mut rng, edges)?,
        ModelKind::NorrosReittu | ModelKind::ChungLu => rank1::generate(config, &mut rng, edges),
    };
    Ok(DegreeSample {
        config: config.clone(),
        seed,
        positions: out.positions,
        weights: out.weights,
        degrees: out.degrees,
        scaling,
        simulated_vertices: out.simulated,
        buffer: out.buffer,
    })
}

/// Raw generator output shared by the model implementations.
pub(crate) struct Generated {
    pub positions: Vec<f64>,
    pub weights: Vec<f64>,
    pub degrees: Vec<u64>,
    pub simulated: u64,
    pub buffer: Option<f64>,
}
