//! Pseudo-spectral simulation of incompressible MHD driven by compensated
//! Poisson jump noise, in the mild (semigroup-convolution) formulation, plus
//! the property suite that checks every estimate the solver relies on.
//!
//! The domain is the periodic torus [0, L)^d, d = 2 or 3. All linear
//! operators are exact Fourier multipliers on divergence-free mean-zero
//! fields; the nonlinearity is pseudo-spectral with two-thirds dealiasing;
//! jump noise has finitely many marks with exact event-time sampling.
//!
//! Module map:
//! - [`grid`], [`field`], [`state`] — torus grids, transforms, differential
//!   operators, the Leray-Helmholtz projection, and the coupled state.
//! - [`semigroup`] — the viscous/resistive block operator, its analytic
//!   semigroup, fractional powers, and smoothing probes.
//! - [`nonlinearity`] — the MHD bilinear term, trilinear form, dealiasing,
//!   and empirical boundedness probes.
//! - [`noise`] — Poisson jump paths, compensated integrals, and the
//!   stochastic convolution.
//! - [`norms`] — L^p norms, trajectory (Bochner) norms, weak-L^q seminorms,
//!   and scaling-exponent bookkeeping.
//! - [`solver`] — the Duhamel map, Picard iteration with smallness gate and
//!   contraction reporting, exponential Euler stepping, 2D continuation, and
//!   energy/Gronwall diagnostics.
//! - [`verify`] — the one-command property suite.
//! - [`snapshot`] — binary field snapshots.

pub mod error;
pub mod field;
pub mod grid;
pub mod noise;
pub mod nonlinearity;
pub mod norms;
pub mod semigroup;
pub mod snapshot;
pub mod solver;
pub mod state;
pub mod verify;

pub use error::{Error, Result};
pub use grid::{make_grid, Grid};
pub use norms::{make_exponents, ExponentTriple, TrajectoryRecord};
pub use state::MhdState;
