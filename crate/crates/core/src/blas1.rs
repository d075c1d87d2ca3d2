//! Level-1 vector kernels.
//!
//! Accumulations run strictly left to right with no pairwise or compensated
//! summation, so results are reproducible across runs and match a
//! straightforward device port of the same loops.

use crate::error::Error;
use crate::scalar::Scalar;

/// Inner product `x . y`.
///
/// # Errors
///
/// Returns [`Error::DimensionMismatch`] if the lengths differ.
pub fn dot<T: Scalar>(x: &[T], y: &[T]) -> Result<T, Error> {
    if x.len() != y.len() {
        return Err(Error::DimensionMismatch {
            left: x.len(),
            right: y.len(),
        });
    }
    let mut acc = T::zero();
    for (&xi, &yi) in x.iter().zip(y) {
        acc = acc + xi * yi;
    }
    Ok(acc)
}

/// `y <- alpha * x + y`.
///
/// # Errors
///
/// Returns [`Error::DimensionMismatch`] if the lengths differ.
pub fn axpy<T: Scalar>(alpha: T, x: &[T], y: &mut [T]) -> Result<(), Error> {
    if x.len() != y.len() {
        return Err(Error::DimensionMismatch {
            left: x.len(),
            right: y.len(),
        });
    }
    for (yi, &xi) in y.iter_mut().zip(x) {
        *yi = *yi + alpha * xi;
    }
    Ok(())
}

/// Euclidean norm, accumulated in the same left-to-right order as [`dot`].
pub fn nrm2<T: Scalar>(x: &[T]) -> T {
    let mut acc = T::zero();
    for &xi in x {
        acc = acc + xi * xi;
    }
    acc.sqrt()
}

/// `x <- alpha * x`.
pub fn scal<T: Scalar>(alpha: T, x: &mut [T]) {
    for xi in x.iter_mut() {
        *xi = alpha * *xi;
    }
}
