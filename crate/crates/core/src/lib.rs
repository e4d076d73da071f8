//! Euler scheme, limit constants and error-distribution statistics for
//! stochastic Volterra equations with kernel `(t-s)^α`, `α ∈ (-1/2, 1/2)`.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod coefficient;
pub mod constants;
pub mod conv;
pub mod error;
pub mod experiment;
pub mod kernel;
pub mod montecarlo;
pub mod parallel;
pub mod paths;
pub mod quadrature;
pub mod series;
pub mod solver;
pub mod stats;

pub use error::{Error, Result};
