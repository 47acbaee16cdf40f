//! Verification lab for the deformed complex Ginibre ensemble `H = A0 + H0`.
//!
//! The crate is organised by concern:
//!
//! * [`ensemble`] builds deformation matrices and samples Ginibre draws from
//!   reproducible per-trial random streams.
//! * [`detequiv`] computes the deterministic equivalents attached to a point
//!   `z0` (the fixed point `u_*`, the density parameter `rho`, the support test
//!   and the saddle profile).
//! * [`spectra`] holds global spectral statistics: eigenvalues, the Girko
//!   log-potential identity, the generating functional and the smoothing check.
//! * [`localstats`] estimates the rescaled pair correlation and compares it to
//!   the universal bulk curve and to the exact finite-n Ginibre kernel.
//! * [`susy`] is an exact finite Grassmann-algebra engine together with the
//!   Berezin / superdeterminant / Hubbard-Stratonovich identity checks.
//! * [`runner`] is the configuration, persistence and reporting layer used by
//!   the `dgin` binary.
//!
//! Scalar-level math is generic over [`Real`] (and Grassmann coefficients over
//! [`susy::Coefficient`]); the aliases below fix the usual instantiations.

pub mod contour;
pub mod detequiv;
pub mod ensemble;
pub mod error;
pub mod linalg;
pub mod localstats;
pub mod matrix;
pub mod quadrature;
pub mod rng;
pub mod runner;
pub mod scalar;
pub mod spectra;
pub mod susy;

pub use error::{Error, Result};
pub use matrix::ComplexMatrix;
pub use scalar::Real;

pub use num_complex::Complex64;

/// Singular spectrum of `A0 - z` in double precision.
pub type ShiftedSpectrum = detequiv::ShiftedSpectrum<f64>;
/// Single-precision singular spectrum, for cheap scans.
pub type ShiftedSpectrum32 = detequiv::ShiftedSpectrum<f32>;
/// Grassmann element with double-precision complex coefficients.
pub type Grassmann = susy::GrassmannElement<Complex64>;
/// Grassmann element with exact rational coefficients.
pub type ExactGrassmann = susy::GrassmannElement<num_rational::Rational64>;
/// Supermatrix over complex Grassmann coefficients.
pub type SuperMatrix = susy::SuperMatrix<Complex64>;
