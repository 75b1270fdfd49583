//! Desk-scale numerical laboratory for degenerate and singular elliptic
//! operators: weighted discrete bilinear forms with a partially pinned
//! boundary, mollified Green and gradient kernels with decay-exponent fits,
//! Riesz potentials, Moser-iteration sup bounds, and certification sweeps
//! for the power-truncation auxiliary-function inequalities.
//!
//! Start from the `examples/` directory: each example exercises one
//! capability end to end. The `greenlab` binary wires the same pipelines to
//! JSON/CSV artifacts.

pub mod analysis;
pub mod auxfun;
pub mod cli;
pub mod coeff;
pub mod domain;
pub mod error;
pub mod kernels;
pub mod mollifier;
pub mod moser;
pub mod operator;
pub mod riesz;

pub use error::{Error, Result};
