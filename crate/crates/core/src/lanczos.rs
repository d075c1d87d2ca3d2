//! Extreme eigenvalue estimation for symmetric operators.
//!
//! A Lanczos sweep with full reorthogonalization projects the operator
//! onto a Krylov subspace; the extreme eigenvalues of the projected
//! tridiagonal matrix — extracted by bisection on the Sturm negative-pivot
//! count — converge to the operator's extremes from the inside, so the
//! condition number estimate `lambda_max / lambda_min` is what drives the
//! iteration-count analysis of the solver.
//!
//! The operators of interest never exist as assembled matrices: the
//! diagonally scaled `D^{-1/2} A D^{-1/2}` and the factored-inverse form
//! `Z^t A Z` share the spectrum of the corresponding preconditioned
//! system, so both get matrix-free wrappers here.
//!
//! The start vector comes from a fixed-seed splitmix64 stream: runs are
//! reproducible with no dependency on an external generator.

use crate::error::Error;
use crate::fsai::FactoredInverse;
use crate::precond::Preconditioner;
use crate::scalar::Scalar;
use crate::sparse::CsrMatrix;

/// Matrix-free symmetric operator.
pub trait SymmetricOperator<T: Scalar> {
    fn dim(&self) -> usize;
    /// `y = Op x`; both slices have length [`SymmetricOperator::dim`].
    fn apply_into(&self, x: &[T], y: &mut [T]);
}

impl<T: Scalar> SymmetricOperator<T> for CsrMatrix<T> {
    fn dim(&self) -> usize {
        self.n_rows()
    }

    fn apply_into(&self, x: &[T], y: &mut [T]) {
        self.spmv_into(x, y);
    }
}

/// `D^{-1/2} A D^{-1/2}` for the diagonal preconditioner: same spectrum as
/// the diagonally preconditioned system.
pub struct JacobiScaledOperator<'a, T> {
    a: &'a CsrMatrix<T>,
    inv_sqrt: Vec<T>,
}

impl<'a, T: Scalar> JacobiScaledOperator<'a, T> {
    /// # Errors
    ///
    /// [`Error::Structure`] for a nonsquare matrix,
    /// [`Error::SingularDiagonal`] for a nonpositive diagonal entry.
    pub fn new(a: &'a CsrMatrix<T>) -> Result<Self, Error> {
        let n = a.n_rows();
        if n != a.n_cols() {
            return Err(Error::Structure(format!(
                "scaled operator needs a square matrix, got {n}x{}",
                a.n_cols()
            )));
        }
        let mut inv_sqrt = Vec::with_capacity(n);
        for k in 0..n {
            match a.get(k, k) {
                Some(d) if d > T::zero() => inv_sqrt.push(T::one() / d.sqrt()),
                _ => return Err(Error::SingularDiagonal { row: k }),
            }
        }
        Ok(Self { a, inv_sqrt })
    }
}

impl<T: Scalar> SymmetricOperator<T> for JacobiScaledOperator<'_, T> {
    fn dim(&self) -> usize {
        self.a.n_rows()
    }

    fn apply_into(&self, x: &[T], y: &mut [T]) {
        let w: Vec<T> = x
            .iter()
            .zip(&self.inv_sqrt)
            .map(|(&xi, &si)| xi * si)
            .collect();
        self.a.spmv_into(&w, y);
        for (yi, &si) in y.iter_mut().zip(&self.inv_sqrt) {
            *yi = *yi * si;
        }
    }
}

/// `Z^t A Z` for a factored inverse `M = Z Z^t`: same spectrum as the
/// preconditioned system `M A`.
pub struct FactoredOperator<'a, T> {
    a: &'a CsrMatrix<T>,
    factor: &'a FactoredInverse<T>,
}

impl<'a, T: Scalar> FactoredOperator<'a, T> {
    /// # Errors
    ///
    /// [`Error::DimensionMismatch`] when the factor and matrix disagree.
    pub fn new(a: &'a CsrMatrix<T>, factor: &'a FactoredInverse<T>) -> Result<Self, Error> {
        if a.n_rows() != factor.dim() || a.n_cols() != factor.dim() {
            return Err(Error::DimensionMismatch {
                left: a.n_rows(),
                right: factor.dim(),
            });
        }
        Ok(Self { a, factor })
    }
}

impl<T: Scalar> SymmetricOperator<T> for FactoredOperator<'_, T> {
    fn dim(&self) -> usize {
        self.a.n_rows()
    }

    fn apply_into(&self, x: &[T], y: &mut [T]) {
        let n = x.len();
        let mut w1 = vec![T::zero(); n];
        let mut w2 = vec![T::zero(); n];
        self.factor.z().spmv_into(x, &mut w1);
        self.a.spmv_into(&w1, &mut w2);
        self.factor.z_t().spmv_into(&w2, y);
    }
}

/// Result of one estimation sweep.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EigEstimate {
    pub lambda_min: f64,
    pub lambda_max: f64,
    /// Lanczos steps actually taken.
    pub iterations: usize,
    /// The sweep found an invariant subspace before the requested number
    /// of steps; the estimates are then exact up to roundoff.
    pub early_stop: bool,
}

impl EigEstimate {
    /// Spectral condition number estimate.
    pub fn condition(&self) -> f64 {
        self.lambda_max / self.lambda_min
    }
}

const START_SEED: u64 = 0x0123_4567_89AB_CDEF;

fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9E37_79B9_7F4A_7C15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Estimates the extreme eigenvalues of `op` with at most `iters` Lanczos
/// steps.
///
/// # Errors
///
/// [`Error::Config`] when fewer than 20 steps are requested (the projected
/// extremes are not trustworthy below that) or the operator is empty.
pub fn estimate_extreme_eigs<T: Scalar, Op: SymmetricOperator<T> + ?Sized>(
    op: &Op,
    iters: usize,
) -> Result<EigEstimate, Error> {
    if iters < 20 {
        return Err(Error::Config(format!(
            "eigenvalue estimation needs at least 20 steps, got {iters}"
        )));
    }
    let n = op.dim();
    if n == 0 {
        return Err(Error::Config("operator dimension is zero".into()));
    }
    let steps = iters.min(n);

    // Reproducible start vector with entries in [-1, 1).
    let mut state = START_SEED;
    let mut v: Vec<T> = (0..n)
        .map(|_| {
            let u = (splitmix64(&mut state) >> 11) as f64 / (1u64 << 53) as f64;
            T::from_f64(2.0 * u - 1.0)
        })
        .collect();
    normalize(&mut v);

    let mut basis: Vec<Vec<T>> = Vec::with_capacity(steps);
    let mut alpha = Vec::with_capacity(steps);
    let mut beta: Vec<f64> = Vec::with_capacity(steps.saturating_sub(1));
    let mut w = vec![T::zero(); n];
    let mut early_stop = false;

    for _ in 0..steps {
        basis.push(v.clone());
        let vj = basis.last().expect("just pushed");
        op.apply_into(vj, &mut w);
        let a_j = dot_f64(&w, vj);
        alpha.push(a_j);
        // Orthogonalize against the whole basis, twice: the second pass
        // removes the components reintroduced by roundoff in the first.
        for _ in 0..2 {
            for u in &basis {
                let c = dot_f64(&w, u);
                for (wi, &ui) in w.iter_mut().zip(u.iter()) {
                    *wi = *wi - T::from_f64(c) * ui;
                }
            }
        }
        let b_j = norm_f64(&w);
        // An invariant subspace has been found when the new direction
        // vanishes relative to the operator scale seen so far.
        let scale = alpha
            .iter()
            .map(|a: &f64| a.abs())
            .fold(1e-300, f64::max);
        if b_j <= scale * 1e-12 {
            early_stop = true;
            break;
        }
        if beta.len() + 1 < steps {
            beta.push(b_j);
            let inv = T::from_f64(1.0 / b_j);
            for (vi, &wi) in v.iter_mut().zip(w.iter()) {
                *vi = wi * inv;
            }
        }
    }

    let taken = alpha.len();
    beta.truncate(taken.saturating_sub(1));
    let (lambda_min, lambda_max) = tridiag_extremes(&alpha, &beta);
    Ok(EigEstimate {
        lambda_min,
        lambda_max,
        iterations: taken,
        early_stop,
    })
}

fn dot_f64<T: Scalar>(a: &[T], b: &[T]) -> f64 {
    a.iter()
        .zip(b.iter())
        .map(|(&x, &y)| x.to_f64() * y.to_f64())
        .sum()
}

fn norm_f64<T: Scalar>(a: &[T]) -> f64 {
    dot_f64(a, a).sqrt()
}

fn normalize<T: Scalar>(v: &mut [T]) {
    let inv = T::from_f64(1.0 / norm_f64(v));
    for vi in v.iter_mut() {
        *vi = *vi * inv;
    }
}

// Number of eigenvalues of the projected tridiagonal matrix below x, by
// the sign count of the LDL^t pivots of T - x I.
fn count_below(alpha: &[f64], beta: &[f64], x: f64) -> usize {
    let mut count = 0;
    let mut d = 1.0;
    for i in 0..alpha.len() {
        let b2 = if i == 0 { 0.0 } else { beta[i - 1] * beta[i - 1] };
        d = alpha[i] - x - b2 / d;
        if d == 0.0 {
            d = 1e-300;
        }
        if d < 0.0 {
            count += 1;
        }
    }
    count
}

fn tridiag_extremes(alpha: &[f64], beta: &[f64]) -> (f64, f64) {
    let m = alpha.len();
    let radius = |i: usize| {
        let left = if i == 0 { 0.0 } else { beta[i - 1].abs() };
        let right = if i + 1 < m { beta[i].abs() } else { 0.0 };
        left + right
    };
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for i in 0..m {
        lo = lo.min(alpha[i] - radius(i));
        hi = hi.max(alpha[i] + radius(i));
    }
    if m == 1 {
        return (alpha[0], alpha[0]);
    }
    let bisect = |want: usize| {
        // Smallest x with count_below(x) >= want, to bisection precision.
        let (mut a, mut b) = (lo, hi);
        for _ in 0..80 {
            let mid = 0.5 * (a + b);
            if count_below(alpha, beta, mid) >= want {
                b = mid;
            } else {
                a = mid;
            }
        }
        0.5 * (a + b)
    };
    (bisect(1), bisect(m))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::limit::{limit_condition_number, limit_eigenvalues, limit_matrix};

    fn diag_csr(values: &[f64]) -> CsrMatrix<f64> {
        let entries: Vec<(usize, usize, f64)> = values
            .iter()
            .enumerate()
            .map(|(k, &v)| (k, k, v))
            .collect();
        CsrMatrix::from_coo(values.len(), values.len(), &entries).unwrap()
    }

    #[test]
    fn identity_terminates_immediately_with_exact_values() {
        let a: CsrMatrix<f64> = CsrMatrix::identity(50);
        let est = estimate_extreme_eigs(&a, 30).unwrap();
        assert!(est.early_stop);
        assert_eq!(est.iterations, 1);
        assert!((est.lambda_min - 1.0).abs() < 1e-12);
        assert!((est.lambda_max - 1.0).abs() < 1e-12);
    }

    #[test]
    fn small_diagonal_spectrum_is_recovered_exactly() {
        let a = diag_csr(&[2.0, 3.0, 5.0, 7.0, 11.0]);
        let est = estimate_extreme_eigs(&a, 20).unwrap();
        assert!(est.iterations <= 5);
        assert!((est.lambda_min - 2.0).abs() < 1e-9, "{est:?}");
        assert!((est.lambda_max - 11.0).abs() < 1e-9, "{est:?}");
    }

    #[test]
    fn ill_conditioned_band_extremes_converge_from_inside() {
        let n = 200;
        let a: CsrMatrix<f64> = limit_matrix(n).unwrap();
        let eigs = limit_eigenvalues(n);
        let (want_max, want_min) = (eigs[0], eigs[n - 1]);
        // Partial sweep: the top is pinned quickly, the clustered bottom
        // more slowly, and both estimates stay inside the true interval.
        let partial = estimate_extreme_eigs(&a, 100).unwrap();
        assert!((partial.lambda_max - want_max).abs() <= 0.01 * want_max);
        assert!((partial.lambda_min - want_min).abs() <= 0.05 * want_min);
        assert!(partial.lambda_max <= want_max * (1.0 + 1e-10));
        assert!(partial.lambda_min >= want_min * (1.0 - 1e-10));
        // Full sweep: exact to roundoff.
        let full = estimate_extreme_eigs(&a, n).unwrap();
        assert!((full.lambda_max - want_max).abs() <= 1e-8 * want_max);
        assert!((full.lambda_min - want_min).abs() <= 1e-8 * want_min);
        let cond = limit_condition_number(n);
        assert!((full.condition() - cond).abs() <= 1e-6 * cond);
    }

    #[test]
    fn jacobi_scaling_of_a_diagonal_matrix_is_the_identity() {
        let a = diag_csr(&[4.0, 9.0, 16.0, 25.0]);
        let op = JacobiScaledOperator::new(&a).unwrap();
        let est = estimate_extreme_eigs(&op, 20).unwrap();
        assert!(est.early_stop);
        assert!((est.lambda_min - 1.0).abs() < 1e-12);
        assert!((est.lambda_max - 1.0).abs() < 1e-12);
    }

    #[test]
    fn scaled_operator_rejects_a_zero_diagonal() {
        let a = CsrMatrix::from_coo(2, 2, &[(0, 0, 1.0), (0, 1, 1.0), (1, 0, 1.0)]).unwrap();
        assert!(matches!(
            JacobiScaledOperator::new(&a),
            Err(Error::SingularDiagonal { row: 1 })
        ));
    }

    #[test]
    fn untruncated_factor_flattens_the_spectrum_to_one() {
        use crate::fsai::{extract_tridiagonal, FactoredInverse};
        let n = 24;
        let a: CsrMatrix<f64> = limit_matrix(n).unwrap();
        let t = extract_tridiagonal(&a).unwrap();
        let factor = FactoredInverse::from_tridiagonal(&t, n - 1).unwrap();
        let op = FactoredOperator::new(&a, &factor).unwrap();
        let est = estimate_extreme_eigs(&op, 40).unwrap();
        assert!((est.lambda_min - 1.0).abs() < 1e-8, "{est:?}");
        assert!((est.lambda_max - 1.0).abs() < 1e-8, "{est:?}");
    }

    #[test]
    fn factored_operator_checks_dimensions() {
        use crate::fsai::{extract_tridiagonal, FactoredInverse};
        let a: CsrMatrix<f64> = limit_matrix(10).unwrap();
        let b: CsrMatrix<f64> = limit_matrix(11).unwrap();
        let t = extract_tridiagonal(&a).unwrap();
        let factor = FactoredInverse::from_tridiagonal(&t, 2).unwrap();
        assert!(FactoredOperator::new(&b, &factor).is_err());
    }

    #[test]
    fn too_few_steps_are_rejected() {
        let a: CsrMatrix<f64> = CsrMatrix::identity(4);
        assert!(matches!(
            estimate_extreme_eigs(&a, 19),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn estimates_are_deterministic() {
        let a: CsrMatrix<f64> = limit_matrix(60).unwrap();
        let e1 = estimate_extreme_eigs(&a, 25).unwrap();
        let e2 = estimate_extreme_eigs(&a, 25).unwrap();
        assert_eq!(e1, e2);
    }
}
