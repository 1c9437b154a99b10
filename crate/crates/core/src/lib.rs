//! Eigenvalue and eigenvector structure of complex Hadamard matrices (CHMs).
//!
//! The crate provides generators for the classical 6×6 families, dephasing
//! and monomial-equivalence tooling, a small dense complex eigensolver,
//! verifiers for the constant-eigenpair structure of dephased CHMs,
//! executable constructions that certify the impossibility arguments for
//! repeated eigenvalues, and a multi-start search over dephased phase space
//! for matrices with a prescribed eigenvalue pattern.

pub mod eigen;
pub mod error;
pub mod families;
pub mod gadgets;
pub mod hadamard;
pub mod io;
pub mod matrix;
pub mod mub;
pub mod parallel;
pub mod search;
pub mod spectral;

pub use error::{ChmError, Result};
pub use matrix::{CMatrix, C64};
