//! Simulation and solvers for detecting low-volume unitary dynamics: the
//! recurrence circuit and its statistics, amplitude amplification, spectral
//! set-sum factorization, discrete Sternfeld arrays and the spectral-gap
//! construction for verifier circuits.
//!
//! Qubit 0 is the most significant bit of every basis index.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod amplify;
pub mod error;
pub mod exec;
pub mod linalg;
pub mod nusg;
pub mod recurrence;
pub mod rng;
pub mod statevector;
pub mod sternfeld;
pub mod tensorfactor;

pub use error::{Error, Result};
pub use linalg::{ComplexMatrix, UnitaryMatrix, C64};
