//! Boundary trace forms of finite resistance networks.

// `!(x > 0.0)` is used on purpose throughout: it also rejects NaN.
// Index loops over vertex and boundary positions mirror the formulas.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod error;
pub mod generators;
pub mod geometry;
pub mod linalg;
pub mod network;
pub mod potential;
pub mod trace;
pub mod report;
pub mod besov;
pub mod whitney;
pub mod estimates;
pub mod suite;
pub mod cli;

pub use error::{Error, Result};
