//! Pseudospectral laboratory for a fifth-order Camassa-Holm type equation.
//!
//! Layers, bottom up:
//! - [`spectral`]: periodic grid, fields, Fourier multipliers, kernel oracles.
//! - [`littlewood_paley`]: dyadic partition, blocks, Besov and Sobolev norms.
//! - [`equation`]: right-hand sides of the smoothed and transport forms.
//! - [`integrator`]: RK4 time stepping, run loop, Picard iteration mirror.
//! - [`diagnostics`]: invariants, the blow-up functional, characteristics.
//! - [`blowup`]: blow-up certificate constants and the Riccati comparison.
//! - [`inflation`]: the ill-posedness initial-data family and its scan.
//!
//! The `parallel` feature (default) runs pointwise loops and independent
//! transforms on rayon; without it everything runs sequentially with
//! identical results.

// `!(x >= a)` guards also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
mod par;
mod pool;
pub mod blowup;
pub mod diagnostics;
pub mod equation;
pub mod inflation;
pub mod integrator;
pub mod littlewood_paley;
pub mod spectral;

pub use error::{FochError, Result};
pub use spectral::{
    apply_multiplier, derivative, helmholtz, kernel_convolution_oracle, GridSpec, Kernel,
    MultiplierSymbol, OracleResult, SpectralField,
};
