//! Numerical laboratory for travelling waves of the delayed bistable
//! reaction-diffusion equation `u_t = u_xx + f(u(t - τ, x)) - u`.
//!
//! The pipeline runs from a birth-rate model ([`nonlinearity`]) through the
//! finite-box Newton/continuation solver ([`box_solver`]) to tail and
//! invariant diagnostics ([`wave_analysis`]), with the linearized
//! characteristic equation at `u = 1` ([`characteristic`]) and a
//! time-dependent simulator ([`simulator`]) as independent checks.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod box_solver;
pub mod characteristic;
pub mod discretization;
pub mod error;
pub mod exec;
pub mod nonlinearity;
pub mod numeric;
pub mod simulator;
pub mod wave_analysis;

pub use error::{Error, Result};

/// Crate version, recorded in run manifests.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
