//! Inverse cluster expansion toolkit.
//!
//! Builds the chemical-potential expansion of a Gibbs point process from its
//! correlation functions: truncated (Ursell) kernels, the rooted tilde-family
//! and its expansion terms, the Bell-polynomial convergence machinery, the
//! Kirkwood-closure graph oracle, deterministic/Monte-Carlo integration over
//! product domains, a grand-canonical sampler and an end-to-end estimation
//! pipeline from sampled configurations.

pub mod combinatorics;
pub mod correlation;
pub mod error;
pub mod estimate;
pub mod exprep;
pub mod integrate;
pub mod kirkwood;
pub mod sampler;
pub mod series;

pub use error::{Error, Result};

/// Point in R^d, d <= 3; unused trailing coordinates are zero.
pub type Point = [f64; 3];

pub(crate) const ORIGIN: Point = [0.0, 0.0, 0.0];
