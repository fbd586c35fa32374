//! Behaviour-aware distances between mathematical expressions.
//!
//! The crate parses and evaluates expressions, samples random corpora from a
//! probabilistic grammar, and compares expressions with four metrics: the
//! behaviour-aware expression distance (mean 1-Wasserstein distance between
//! output distributions induced by sampling constants), token edit distance,
//! tree edit distance, and RMSE between fitted outputs. The `experiments`
//! module hosts the rank-consistency and error-landscape smoothness studies.

pub mod experiments;
pub mod expr;
pub mod fitting;
pub mod grammar;
pub mod metrics;
pub mod sampling;

pub use expr::{BinOp, EvalFailure, Expr, Func, Token};
