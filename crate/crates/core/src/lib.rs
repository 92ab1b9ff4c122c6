//! Classical emulation stack for one-dimensional SU(3) lattice gauge theory on
//! qubits.
//!
//! The crate is organised bottom-up:
//!
//! * [`pauli`] — exact algebra of weighted Pauli strings and dense realisation.
//! * [`model`] — qubit Hamiltonians, non-Abelian charges and named states.
//! * [`dynamics`] — dense eigendecomposition and exact time evolution.
//! * [`circuit`] — gate-level IR, Trotter synthesis, peephole and resources.
//! * [`noise`] — noisy shot-based execution, twirling and readout calibration.
//! * [`mitigation`] — physics/mitigation runs and the κ-power correction.
//! * [`inference`] — Bayesian cosine-series fits via adaptive Metropolis.
//!
//! The `su3sim` binary wires these together behind a handful of subcommands.

pub mod circuit;
pub mod commands;
pub mod config;
pub mod dynamics;
pub mod error;
pub mod inference;
pub mod linalg;
pub mod mitigation;
pub mod model;
pub mod noise;
pub mod pauli;
pub mod rng;

pub use error::{Error, Result};
pub use num_complex::Complex64;
