//! Preconditioner interface and the two trivial instances.
//!
//! The solver only ever sees the apply operation, so diagonal scaling, the
//! factored approximate inverses, and the identity are interchangeable.
//! Each implementation also reports its analytic cost so run reports can
//! account operations without timing noise.

use crate::error::Error;
use crate::scalar::Scalar;
use crate::sparse::{CsrMatrix, DenseVector};

/// Application-only view of a preconditioner `M ~ A^-1`.
pub trait Preconditioner<T: Scalar> {
    /// Order of the system the preconditioner was built for.
    fn dim(&self) -> usize;

    /// `out <- M r` for pre-validated slices of length [`Preconditioner::dim`].
    fn apply_into(&self, r: &[T], out: &mut [T]);

    /// Floating point operations per application, by the cost model.
    fn apply_flops(&self) -> u64;

    /// One-time construction cost, by the cost model (measured where the
    /// construction is iterative).
    fn build_flops(&self) -> u64;

    /// Checked variant of [`Preconditioner::apply_into`].
    ///
    /// # Errors
    ///
    /// Returns [`Error::DimensionMismatch`] if `r` has the wrong length.
    fn apply(&self, r: &[T]) -> Result<DenseVector<T>, Error> {
        if r.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                left: self.dim(),
                right: r.len(),
            });
        }
        let mut out = vec![T::zero(); r.len()];
        self.apply_into(r, &mut out);
        Ok(out)
    }
}

/// No-op preconditioner; turns the solver into plain conjugate gradients.
#[derive(Debug, Clone)]
pub struct IdentityPrecond {
    n: usize,
}

impl IdentityPrecond {
    pub fn new(n: usize) -> Self {
        Self { n }
    }
}

impl<T: Scalar> Preconditioner<T> for IdentityPrecond {
    fn dim(&self) -> usize {
        self.n
    }

    fn apply_into(&self, r: &[T], out: &mut [T]) {
        out.copy_from_slice(r);
    }

    fn apply_flops(&self) -> u64 {
        0
    }

    fn build_flops(&self) -> u64 {
        0
    }
}

/// Jacobi preconditioner holding the reciprocal diagonal.
#[derive(Debug, Clone)]
pub struct DiagonalPrecond<T> {
    inv_diag: Vec<T>,
}

impl<T: Scalar> DiagonalPrecond<T> {
    /// Extracts and inverts the diagonal of `a`.
    ///
    /// # Errors
    ///
    /// [`Error::Structure`] if `a` is not square; [`Error::SingularDiagonal`]
    /// naming the first row whose diagonal entry is absent, zero, or
    /// negative.
    pub fn from_matrix(a: &CsrMatrix<T>) -> Result<Self, Error> {
        if a.n_rows() != a.n_cols() {
            return Err(Error::Structure(format!(
                "diagonal preconditioner needs a square matrix, got {}x{}",
                a.n_rows(),
                a.n_cols()
            )));
        }
        let mut inv_diag = Vec::with_capacity(a.n_rows());
        for i in 0..a.n_rows() {
            match a.get(i, i) {
                Some(d) if d > T::zero() => inv_diag.push(T::one() / d),
                _ => return Err(Error::SingularDiagonal { row: i }),
            }
        }
        Ok(Self { inv_diag })
    }

    pub fn inv_diag(&self) -> &[T] {
        &self.inv_diag
    }
}

impl<T: Scalar> Preconditioner<T> for DiagonalPrecond<T> {
    fn dim(&self) -> usize {
        self.inv_diag.len()
    }

    fn apply_into(&self, r: &[T], out: &mut [T]) {
        for i in 0..r.len() {
            out[i] = self.inv_diag[i] * r[i];
        }
    }

    fn apply_flops(&self) -> u64 {
        self.inv_diag.len() as u64
    }

    fn build_flops(&self) -> u64 {
        self.inv_diag.len() as u64
    }
}
