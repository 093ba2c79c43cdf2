//! Quantum-signal-processing compiler for bosonic gates.
//!
//! Gates on a qumode coupled to a qubit are expressed as polynomials of the
//! phase-shift variable `z = e^{iΦ}`, completed to unitary 2×2 sequences, and
//! turned into rotation-angle schedules. Every schedule can be replayed on an
//! exact truncated Fock⊗qubit simulator.
//!
//! Module map:
//! - [`poly`]: polynomial arithmetic, root finding, complementary completion
//! - [`kernels`]: interpolation kernels for dispersive and JC couplings
//! - [`angles`]: angle extraction and 2×2 reconstruction
//! - [`sim`]: hybrid simulator, fidelity metrics, Wigner functions
//! - [`gates`]: gate compiler (mod-k, SNAP, qudit CPhase, cat, JC SNAP)
//! - [`nonunitary`]: Kraus-branch synthesis, NLA, parity measurements
//! - [`multitone`]: time-domain multi-tone SNAP baseline

// `!(x > 0.0)` style guards are used on purpose: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod angles;
pub mod error;
pub mod gates;
pub mod kernels;
pub mod multitone;
pub mod nonunitary;
pub mod poly;
pub mod sim;

pub use error::{Error, Result};
pub use num_complex::Complex64 as C64;

/// Tolerance on `| |P|²+|Q|² − 1 |` over the sample grid.
pub const EPS_NORM: f64 = 1e-9;
/// Residual tolerance for computed roots, relative to the largest coefficient.
pub const EPS_ROOT: f64 = 1e-9;
/// Tolerance for "real" coefficients.
pub const EPS_REAL: f64 = 1e-10;
/// Relative threshold below which leading coefficients are trimmed.
pub const TRIM_EPS: f64 = 1e-13;
/// Default number of uniform samples for sup-norm checks on the unit circle.
pub const GRID_SAMPLES: usize = 4096;
