//! Simulation and tail analysis of linear Hawkes and ZHawkes point processes.
//!
//! The ZHawkes intensity `λ = λ∞ + H + Z²` combines a Hawkes feedback `H`
//! with the square of a trend signal `Z`. For `n_H < 1` the process stays
//! stationary even when `n_H + n_Z ≥ 1`, in which case the intensity has a
//! power-law tail with infinite mean. This crate simulates the process
//! exactly by thinning, integrates its continuous-time limit, and measures
//! the tail and its stability over time.

// `!(x > 0.0)` comparisons are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod config;
pub mod diffusion;
pub mod error;
pub mod io;
pub mod kernels;
pub mod oracle;
pub mod point_process;
pub mod stats;

pub use error::{Error, Result};
pub use kernels::{TailRegime, ZHawkesParams};
