//! Oriented curves, ℝ-chains and the signed-length inner product.

mod chain;
mod chain_file;
mod curve;
mod signed_length;

pub use chain::{mean_increment, RChain};
pub use chain_file::{parse_chain_file, ChainSpec, NamedChain, TermSpec};
pub use curve::{Curve, CurveKind, Piece};
pub use signed_length::{piece_signed_length, signed_length, DEFAULT_GEO_TOL};
