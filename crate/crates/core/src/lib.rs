//! Minimal spectral partitions of planar domains.
//!
//! The crate discretizes a planar domain on a uniform cell-centered grid,
//! computes first Dirichlet eigenpairs of the five-point Laplacian on
//! arbitrary cell masks, and searches for m-partitions minimizing the sum of
//! first eigenvalues. Around that core it provides the explicit partitions
//! used as upper bounds (square copies, hexagonal tilings, dyadic cube fills)
//! and a cut-and-glue verifier that splits a partition along a vertical line
//! and audits the resulting energy inequalities.
//!
//! Normalization: a partition `{Ω_j}` of `m` parts is scored by
//! `l = Σ λ₁(Ω_j) / m²`.

pub mod constructions;
pub mod eigen;
mod error;
pub mod glue;
pub mod grid;
pub mod io;
pub mod partition;
mod solver;

pub use error::{Error, Result};

/// First positive zero of the Bessel function J₀.
pub const BESSEL_J0_FIRST_ZERO: f64 = 2.404_825_557_695_773;
