//! Sparse linear algebra for the free-surface elliptic kernel of a
//! spherical-grid ocean model.
//!
//! The crate provides a CSR matrix substrate with Matrix Market I/O, the
//! five-point assembly of the elliptic operator on a latitude/longitude
//! grid, factored approximate-inverse preconditioners built from the
//! operator's tridiagonal part, and a preconditioned conjugate gradient
//! solver with an operation-count model. Everything is generic over the
//! working precision (`f64` by default, `f32` selectable).

pub mod ainv;
pub mod blas1;
pub mod error;
pub mod fsai;
pub mod grid;
pub mod lanczos;
pub mod limit;
pub mod matrix_market;
pub mod pcg;
pub mod precond;
pub mod scalar;
pub mod sparse;
pub mod stepper;

pub use error::Error;
pub use fsai::FactoredInverse;
pub use pcg::{pcg_solve, SolveReport, SolverConfig};
pub use precond::{DiagonalPrecond, IdentityPrecond, Preconditioner};
pub use scalar::Scalar;
pub use sparse::{CsrMatrix, DenseVector};
