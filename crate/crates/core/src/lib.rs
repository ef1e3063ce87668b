//! Numerical verification of the Gaussian Kohler-Jobin comparison: among
//! convex domains of fixed Gaussian torsional rigidity, the half-space
//! minimizes the Gaussian principal frequency.
//!
//! The crate is organized around the objects of that statement:
//!
//! * [`special`] — one-dimensional Gaussian special functions: the normal
//!   CDF and quantile, the Mills-ratio slope `V'`, and the half-space
//!   torsion profile `T(s)` with its derivative and inverse.
//! * [`geometry`] — convex domains in dimension 1 and 2, mesh generation,
//!   and Gaussian-weighted quadrature.
//! * [`ou_solver`] — P1 Galerkin discretization of the Ornstein-Uhlenbeck
//!   operator with Dirichlet conditions: torsion solves, torsional
//!   rigidity, and the principal-frequency eigenproblem.
//! * [`coarea`] — level-set profiles of a reference field: superlevel
//!   measures, the co-area flux, the modified torsional rigidity, and its
//!   distribution function.
//! * [`rearrange`] — the Ehrhard-Kohler-Jobin rearrangement onto a
//!   half-space and the verification pipeline.
//! * [`cli`] — command-line entry points, file formats, and the built-in
//!   verification suite.

pub mod cli;
pub mod coarea;
pub mod error;
pub mod geometry;
pub mod interp;
pub mod linalg;
pub mod ou_solver;
pub mod quad;
pub mod rearrange;
pub mod special;
pub mod tables;

pub use error::{Error, Result};
