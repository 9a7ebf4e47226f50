//! Ground states of the dispersion-managed nonlinear Schroedinger equation
//! with saturable nonlinearities.
//!
//! The crate computes constrained minimizers of the nonlocal energy
//!
//! ```text
//! H(f) = (d_av/2) ||f'||_2^2 - N(f),
//! N(f) = integral of V(|T_r f(x)|) dx psi(r) dr,
//! ```
//!
//! over the mass sphere `||f||_2^2 = lambda`, where `T_r` is the free
//! Schroedinger evolution and `psi` the averaging density induced by a
//! periodic dispersion profile. Alongside the solvers it ships a
//! verification suite for the quantitative structure of the problem:
//! Strichartz bounds, super-quadraticity of the potential, scaling
//! inequalities, sub-additivity of the ground-state energy, existence
//! thresholds, and multiplier bounds.

// validation guards are written as `!(x > 0.0)` on purpose: the negated
// form rejects NaN along with the out-of-range values
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod averaging;
pub mod diagnostics;
pub mod error;
pub mod grid;
pub mod io;
pub mod nonlinearity;
pub mod potentials;
pub mod propagator;
pub mod solver;
pub mod strichartz;

pub use error::{Error, Result};
pub use grid::{Grid, NormKind, SpectralField};
pub use nonlinearity::Problem;
pub use potentials::Potential;
pub use solver::{Method, SolveResult, SolverConfig};
