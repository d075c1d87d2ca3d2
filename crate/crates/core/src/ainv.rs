//! Unbanded factored approximate inverses built by incomplete
//! biconjugation, used as drop-in comparators for the banded scheme.
//!
//! Both variants run the right-looking outer-product biconjugation on the
//! Jacobi-scaled matrix `D^{-1/2} A D^{-1/2}`, so their dropping rules are
//! scale free. They differ only in how fill is controlled:
//!
//! * [`ainv_drop`] removes every off-diagonal entry whose magnitude falls
//!   at or below an absolute tolerance `tau` after each column update.
//! * [`ainv_fixed_nnz`] caps each column at `m` entries, keeping the unit
//!   diagonal plus the largest magnitudes; ties keep the smaller row
//!   index, so the construction is deterministic.
//!
//! The result is wrapped in the same [`FactoredInverse`] type the banded
//! scheme produces, with the diagonal scaling folded into the factor, so
//! every consumer sees one preconditioner interface and one cost model.

use crate::error::Error;
use crate::fsai::FactoredInverse;
use crate::scalar::Scalar;
use crate::sparse::CsrMatrix;

// Fill-control policy applied after every column update.
enum DropRule {
    Tau(f64),
    Largest(usize),
}

/// Biconjugation with absolute drop tolerance `tau`.
///
/// # Errors
///
/// [`Error::Structure`] for a nonsymmetric or nonsquare matrix or a bad
/// `tau`, [`Error::SingularDiagonal`] for a nonpositive diagonal entry,
/// [`Error::Breakdown`] when a pivot loses positivity. A breakdown means
/// dropping destroyed positive definiteness; loosening `tau` changes the
/// approximation but is not guaranteed to restore it.
pub fn ainv_drop<T: Scalar>(a: &CsrMatrix<T>, tau: f64) -> Result<FactoredInverse<T>, Error> {
    if !(tau >= 0.0) || !tau.is_finite() {
        return Err(Error::Structure(format!(
            "drop tolerance must be finite and nonnegative, got {tau}"
        )));
    }
    ainv_build(a, DropRule::Tau(tau))
}

/// Biconjugation keeping at most `m` entries per factor column.
///
/// # Errors
///
/// As [`ainv_drop`], plus [`Error::Structure`] when `m` is zero.
pub fn ainv_fixed_nnz<T: Scalar>(a: &CsrMatrix<T>, m: usize) -> Result<FactoredInverse<T>, Error> {
    if m == 0 {
        return Err(Error::Structure(
            "fixed-fill factor needs at least one entry per column".into(),
        ));
    }
    ainv_build(a, DropRule::Largest(m))
}

fn ainv_build<T: Scalar>(a: &CsrMatrix<T>, rule: DropRule) -> Result<FactoredInverse<T>, Error> {
    let n = a.n_rows();
    if n == 0 || n != a.n_cols() {
        return Err(Error::Structure(format!(
            "biconjugation needs a nonempty square matrix, got {n}x{}",
            a.n_cols()
        )));
    }
    if !a.is_symmetric() {
        return Err(Error::Structure(
            "biconjugation requires a symmetric matrix".into(),
        ));
    }
    // Jacobi scaling; folded back into the factor at the end.
    let mut s = Vec::with_capacity(n);
    for k in 0..n {
        match a.get(k, k) {
            Some(d) if d > T::zero() => s.push(T::one() / d.sqrt()),
            _ => return Err(Error::SingularDiagonal { row: k }),
        }
    }

    // Columns of the unscaled factor, sorted by row, unit diagonal last.
    let mut z: Vec<Vec<(usize, T)>> = (0..n).map(|j| vec![(j, T::one())]).collect();
    // touch[r] lists columns that ever held row r; a lazy superset, so the
    // candidate scan below never misses a coupled column.
    let mut touch: Vec<Vec<usize>> = (0..n).map(|r| vec![r]).collect();
    let mut pivots = Vec::with_capacity(n);
    let mut v = vec![T::zero(); n];
    let mut v_rows: Vec<usize> = Vec::new();
    let mut flops = 0u64;

    for k in 0..n {
        // v = scaled-A times column k.
        for &(r, zr) in &z[k] {
            let (cols, vals) = a.row(r);
            let factor = zr * s[r];
            for (&c, &arc) in cols.iter().zip(vals) {
                v[c] = v[c] + arc * factor * s[c];
                v_rows.push(c);
            }
            flops += 1 + 3 * cols.len() as u64;
        }
        let mut p = T::zero();
        for &(r, zr) in &z[k] {
            p = p + zr * v[r];
        }
        flops += 2 * z[k].len() as u64;
        if !(p > T::zero()) {
            return Err(Error::Breakdown { column: k });
        }

        let mut candidates: Vec<usize> = v_rows
            .iter()
            .flat_map(|&r| touch[r].iter().copied())
            .filter(|&j| j > k)
            .collect();
        candidates.sort_unstable();
        candidates.dedup();

        for j in candidates {
            let mut num = T::zero();
            for &(r, zjr) in &z[j] {
                num = num + zjr * v[r];
            }
            flops += 2 * z[j].len() as u64 + 1;
            let c = num / p;
            if c == T::zero() {
                continue;
            }
            let updated = merge_update(&z[j], &z[k], c);
            flops += 2 * z[k].len() as u64;
            let kept = apply_rule(updated, j, &rule);
            for &(r, _) in &kept {
                touch[r].push(j);
            }
            z[j] = kept;
        }

        pivots.push(p);
        for &r in &v_rows {
            v[r] = T::zero();
        }
        v_rows.clear();
    }

    // Fold the pivot normalization and the Jacobi scaling into the factor:
    // effective column k is s[r] z_k[r] / sqrt(p_k), still upper
    // triangular with a positive diagonal, stored row-wise as Z^t.
    let mut row_start = Vec::with_capacity(n + 1);
    let mut col_index = Vec::new();
    let mut values = Vec::new();
    row_start.push(0);
    for k in 0..n {
        let inv_root = T::one() / pivots[k].sqrt();
        flops += 2 + 2 * z[k].len() as u64;
        for &(r, zr) in &z[k] {
            col_index.push(r);
            values.push(zr * s[r] * inv_root);
        }
        row_start.push(col_index.len());
    }
    let z_t = CsrMatrix::new(n, n, row_start, col_index, values)?;
    FactoredInverse::from_upper_factor(z_t.transpose(), flops)
}

// new = base - c * update, both sorted by row; keeps sorted order.
fn merge_update<T: Scalar>(base: &[(usize, T)], update: &[(usize, T)], c: T) -> Vec<(usize, T)> {
    let mut out = Vec::with_capacity(base.len() + update.len());
    let (mut i, mut j) = (0, 0);
    while i < base.len() || j < update.len() {
        match (base.get(i), update.get(j)) {
            (Some(&(rb, vb)), Some(&(ru, vu))) if rb == ru => {
                out.push((rb, vb - c * vu));
                i += 1;
                j += 1;
            }
            (Some(&(rb, vb)), Some(&(ru, _))) if rb < ru => {
                out.push((rb, vb));
                i += 1;
            }
            (Some(_), Some(&(ru, vu))) => {
                out.push((ru, -(c * vu)));
                j += 1;
            }
            (Some(&(rb, vb)), None) => {
                out.push((rb, vb));
                i += 1;
            }
            (None, Some(&(ru, vu))) => {
                out.push((ru, -(c * vu)));
                j += 1;
            }
            (None, None) => unreachable!(),
        }
    }
    out
}

fn apply_rule<T: Scalar>(col: Vec<(usize, T)>, diag: usize, rule: &DropRule) -> Vec<(usize, T)> {
    match *rule {
        DropRule::Tau(tau) => col
            .into_iter()
            .filter(|&(r, v)| r == diag || v.abs().to_f64() > tau)
            .collect(),
        DropRule::Largest(m) => {
            if col.len() <= m {
                return col;
            }
            let mut off: Vec<(usize, T)> =
                col.iter().copied().filter(|&(r, _)| r != diag).collect();
            off.sort_by(|a, b| {
                b.1.abs()
                    .partial_cmp(&a.1.abs())
                    .expect("factor entries stay finite")
                    .then(a.0.cmp(&b.0))
            });
            off.truncate(m - 1);
            off.sort_unstable_by_key(|&(r, _)| r);
            let mut kept = off;
            let dv = col
                .iter()
                .find(|&&(r, _)| r == diag)
                .expect("diagonal entry is never dropped")
                .1;
            kept.push((diag, dv));
            kept
        }
    }
}
