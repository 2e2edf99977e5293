//! Structure learning for multivariate Bernoulli vectors.
//!
//! The exponential parametrization `θ` and the outcome probabilities `π`
//! are related by a Möbius/zeta pair over the subset lattice, which gives a
//! closed-form estimator of `θ` from empirical frequencies. A per-node
//! ℓ1-logistic neighborhood estimator is included as a baseline, along with
//! a sampler, metrics and a simulation harness.
//!
//! Nodes are 0-based in the API and 1-based in every file format.

pub mod error;
pub mod estimator;
pub mod experiment;
pub mod graph;
pub mod io;
pub mod lattice;
pub mod logistic;
pub mod metrics;
pub mod model;
pub mod sampler;

pub use error::{Error, Result};
pub use graph::GraphEstimate;
pub use lattice::{LatticeVector, SubsetIndex};
pub use model::{ProbabilityVector, ThetaVector};
pub use sampler::SampleMatrix;
