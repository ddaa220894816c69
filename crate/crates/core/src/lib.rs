//! Simulation and verification tools for the increment of the argument of
//! the Gaussian entire function along curves and ℝ-chains.

pub mod chaos;
pub mod covariance;
pub mod error;
pub mod field;
pub mod geometry;
pub mod harness;
pub mod quadrature;
pub mod rng;
pub mod roots;
pub mod special;
pub mod stats;
pub mod winding;

pub use error::{Error, Result};
pub use field::{sample_gef, truncation_order, Field, FieldEvaluator, GefSample};
pub use geometry::{signed_length, Curve, RChain};

/// Crate version, recorded in run manifests.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
