//! Dynamical low-rank integration with oblique, interpolatory tangent-space
//! projections.
//!
//! The crate evolves matrix and third-order-tensor ODEs on fixed-rank
//! manifolds. Instead of the orthogonal tangent projection, the integrators
//! can use oblique projections built from row/column index selections
//! (DEIM-style), so that nonlinear vector fields are only ever sampled at a
//! few rows, columns or fibers.
//!
//! Layout:
//! - [`kernels`]: factored linear algebra (truncation, exponential and
//!   phi-function actions, small Sylvester solves),
//! - [`deim`]: index selectors and their growth-factor certificates,
//! - [`manifold`]: tangent projections on the fixed-rank matrix manifold and
//!   polytope diagnostics for selector discontinuities,
//! - [`steppers`]: projected Runge-Kutta and exponential integrators,
//! - [`tucker`]: the Tucker-tensor counterpart,
//! - [`problems`]: benchmark vector fields with sampling oracles.

pub mod error;
pub mod la;
pub mod mat;
pub mod scalar;

pub mod deim;
pub mod kernels;
pub mod manifold;
pub mod problems;
pub mod steppers;
pub mod tucker;

pub use error::Error;
pub use mat::{Mat, Op};
pub use scalar::Scalar;

pub type Complex64 = num_complex::Complex64;
