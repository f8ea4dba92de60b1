//! Scale-free inhomogeneous random graphs and the statistics of their
//! large degrees.
//!
//! The crate samples five graph families (lattice scale-free percolation,
//! ultra-small geometric networks, the heterogeneous random connection
//! model, Norros-Reittu and Chung-Lu), extracts degrees inside a growing
//! observation window and checks the extreme-value behaviour of those
//! degrees by Monte Carlo: Frechet maxima, Poisson point-process limits of
//! the rescaled degree sequence, Hill-estimator consistency and the
//! correspondence between large weights and large degrees.
//!
//! Module map:
//! - [`weights`]: regularly varying weight laws and the quantile `q(t)`.
//! - [`models`]: graph samplers, scaling constants, truncation bias and the
//!   coupled Norros-Reittu / Chung-Lu generator.
//! - [`pointproc`]: rescaled degree point processes and the limit measure.
//! - [`estimators`]: Hill estimator, Frechet law, KS distance, tail slopes.
//! - [`experiments`]: parallel replication drivers and reports.
//! - [`config`]: the flat `key = value` configuration format.

// `!(x > 0.0)` rejects NaN together with nonpositive values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod error;
pub mod estimators;
pub mod experiments;
pub mod models;
pub mod numeric;
pub mod pointproc;
pub mod stats;
pub mod weights;

pub use error::{Error, Result};
pub use models::{DegreeSample, GeneratorMode, ModelConfig, ModelKind, ScalingConstants};
pub use weights::WeightDistribution;
