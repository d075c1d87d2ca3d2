//! Pole-limit operator of the normalized five-point system.
//!
//! As the latitude window approaches the pole, every interior row of the
//! diagonally scaled elliptic operator degenerates to the same tridiagonal
//! stencil `(-1/2, 1, -1/2)`. That limit matrix has a closed-form spectrum,
//! which makes it the reference problem for conditioning and convergence
//! checks.

use std::f64::consts::PI;

use crate::error::Error;
use crate::scalar::Scalar;
use crate::sparse::CsrMatrix;

/// Tridiagonal limit matrix `tridiag(-1/2, 1, -1/2)` of order `n`.
///
/// # Errors
///
/// Returns [`Error::Domain`] for `n = 0`.
pub fn limit_matrix<T: Scalar>(n: usize) -> Result<CsrMatrix<T>, Error> {
    if n == 0 {
        return Err(Error::Domain("limit matrix order must be positive".into()));
    }
    let half = T::from_f64(-0.5);
    let mut entries = Vec::with_capacity(3 * n);
    for i in 0..n {
        if i > 0 {
            entries.push((i, i - 1, half));
        }
        entries.push((i, i, T::one()));
        if i + 1 < n {
            entries.push((i, i + 1, half));
        }
    }
    CsrMatrix::from_coo(n, n, &entries)
}

/// Eigenvalues `1 + cos(k pi / (n + 1))`, `k = 1..=n`, sorted descending.
pub fn limit_eigenvalues(n: usize) -> Vec<f64> {
    (1..=n)
        .map(|k| 1.0 + (k as f64 * PI / (n as f64 + 1.0)).cos())
        .collect()
}

/// Spectral condition number of the order-`n` limit matrix.
pub fn limit_condition_number(n: usize) -> f64 {
    let t = (PI / (n as f64 + 1.0)).cos();
    (1.0 + t) / (1.0 - t)
}
