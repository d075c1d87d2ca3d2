//! Randomized structural invariants for the sparse kernels and the
//! factorization paths, plus frozen values for the hand-checkable cases.

use nalgebra::DMatrix;
use oceanpcg::blas1::{dot, nrm2};
use oceanpcg::fsai::{cholesky_bidiagonal, extract_tridiagonal, truncated_inverse_factor};
use oceanpcg::limit::{limit_condition_number, limit_eigenvalues, limit_matrix};
use oceanpcg::matrix_market::{read_matrix_market_from, write_matrix_market_to};
use oceanpcg::{ainv, CsrMatrix, FactoredInverse, Preconditioner};
use proptest::prelude::*;

/// Nonzero magnitudes in a range where neither overflow nor underflow can
/// blur the bitwise comparisons.
fn value() -> impl Strategy<Value = f64> {
    prop_oneof![-1e3..-1e-3f64, 1e-3..1e3f64]
}

/// Arbitrary rectangular matrix as a dense occupancy mask, so duplicate
/// coordinates are impossible by construction.
fn coo_matrix() -> impl Strategy<Value = (usize, usize, Vec<Option<f64>>)> {
    (1..=8usize, 1..=8usize).prop_flat_map(|(rows, cols)| {
        proptest::collection::vec(proptest::option::of(value()), rows * cols)
            .prop_map(move |cells| (rows, cols, cells))
    })
}

fn csr_from_cells(rows: usize, cols: usize, cells: &[Option<f64>]) -> CsrMatrix<f64> {
    let mut entries = Vec::new();
    for i in 0..rows {
        for j in 0..cols {
            if let Some(v) = cells[i * cols + j] {
                entries.push((i, j, v));
            }
        }
    }
    CsrMatrix::from_coo(rows, cols, &entries).unwrap()
}

/// Symmetric tridiagonal, strictly diagonally dominant, hence SPD:
/// each diagonal entry exceeds the sum of its neighbors by a positive margin.
fn dd_tridiagonal(max_n: usize) -> impl Strategy<Value = CsrMatrix<f64>> {
    (2..=max_n).prop_flat_map(|n| {
        let offs = proptest::collection::vec(
            prop_oneof![-2.0..-0.01f64, 0.01..2.0f64],
            n - 1,
        );
        let margins = proptest::collection::vec(0.1..2.0f64, n);
        (offs, margins).prop_map(move |(offs, margins)| {
            let mut entries = Vec::new();
            for k in 0..n {
                let left = if k > 0 { offs[k - 1].abs() } else { 0.0 };
                let right = if k + 1 < n { offs[k].abs() } else { 0.0 };
                entries.push((k, k, margins[k] + left + right));
                if k + 1 < n {
                    entries.push((k, k + 1, offs[k]));
                    entries.push((k + 1, k, offs[k]));
                }
            }
            CsrMatrix::from_coo(n, n, &entries).unwrap()
        })
    })
}

/// Dense symmetric diagonally dominant SPD matrix, stored sparsely.
fn dd_symmetric(max_n: usize) -> impl Strategy<Value = CsrMatrix<f64>> {
    (2..=max_n).prop_flat_map(|n| {
        proptest::collection::vec(-1.0..1.0f64, n * n).prop_map(move |raw| {
            let mut sym = vec![0.0; n * n];
            for i in 0..n {
                for j in 0..n {
                    if i != j {
                        sym[i * n + j] = 0.5 * (raw[i * n + j] + raw[j * n + i]);
                    }
                }
            }
            let mut entries = Vec::new();
            for i in 0..n {
                let row_sum: f64 = (0..n).filter(|&j| j != i).map(|j| sym[i * n + j].abs()).sum();
                entries.push((i, i, 1.0 + row_sum));
                for j in 0..n {
                    if i != j {
                        entries.push((i, j, sym[i * n + j]));
                    }
                }
            }
            CsrMatrix::from_coo(n, n, &entries).unwrap()
        })
    })
}

/// Independent column-by-column back substitution on the dense factor.
fn dense_upper_inverse(u: &DMatrix<f64>) -> DMatrix<f64> {
    let n = u.nrows();
    let mut inv = DMatrix::zeros(n, n);
    for k in 0..n {
        let mut col = vec![0.0f64; n];
        for r in (0..=k).rev() {
            let mut acc = if r == k { 1.0 } else { 0.0 };
            for c in r + 1..=k {
                acc -= u[(r, c)] * col[c];
            }
            col[r] = acc / u[(r, r)];
        }
        for r in 0..n {
            inv[(r, k)] = col[r];
        }
    }
    inv
}

fn dense_from_csr(a: &CsrMatrix<f64>) -> DMatrix<f64> {
    DMatrix::from_fn(a.n_rows(), a.n_cols(), |i, j| a.get(i, j).unwrap_or(0.0))
}

proptest! {
    #[test]
    fn spmv_matches_a_dense_oracle((rows, cols, cells) in coo_matrix(),
                                   seed in 0..u32::MAX) {
        let a = csr_from_cells(rows, cols, &cells);
        let x: Vec<f64> = (0..cols)
            .map(|j| ((seed as f64 + j as f64) * 0.37).sin())
            .collect();
        let got = a.spmv(&x).unwrap();
        for i in 0..rows {
            let mut want = 0.0;
            for j in 0..cols {
                want += cells[i * cols + j].unwrap_or(0.0) * x[j];
            }
            prop_assert!((got[i] - want).abs() <= 1e-12 * (1.0 + want.abs()));
        }
    }

    #[test]
    fn transpose_is_an_involution_bit_for_bit((rows, cols, cells) in coo_matrix()) {
        let a = csr_from_cells(rows, cols, &cells);
        let back = a.transpose().transpose();
        prop_assert_eq!(back.n_rows(), a.n_rows());
        prop_assert_eq!(back.n_cols(), a.n_cols());
        prop_assert_eq!(back.row_start(), a.row_start());
        prop_assert_eq!(back.col_index(), a.col_index());
        let bits = |m: &CsrMatrix<f64>| -> Vec<u64> {
            m.values().iter().map(|v| v.to_bits()).collect()
        };
        prop_assert_eq!(bits(&back), bits(&a));
    }

    #[test]
    fn matrix_market_round_trip_is_exact((rows, cols, cells) in coo_matrix()) {
        let a = csr_from_cells(rows, cols, &cells);
        let mut buf = Vec::new();
        write_matrix_market_to(&mut buf, &a).unwrap();
        let b: CsrMatrix<f64> = read_matrix_market_from(buf.as_slice()).unwrap();
        prop_assert_eq!(b.n_rows(), a.n_rows());
        prop_assert_eq!(b.n_cols(), a.n_cols());
        prop_assert_eq!(b.row_start(), a.row_start());
        prop_assert_eq!(b.col_index(), a.col_index());
        let bits = |m: &CsrMatrix<f64>| -> Vec<u64> {
            m.values().iter().map(|v| v.to_bits()).collect()
        };
        prop_assert_eq!(bits(&b), bits(&a));
    }

    #[test]
    fn cholesky_diagonal_dominates_the_superdiagonal(a in dd_tridiagonal(64)) {
        let t = extract_tridiagonal(&a).unwrap();
        let u = cholesky_bidiagonal(&t).unwrap();
        for k in 0..u.n() - 1 {
            prop_assert!(u.diag[k].abs() > u.sup[k].abs());
        }
    }

    #[test]
    fn closed_form_inverse_matches_dense_back_substitution(a in dd_tridiagonal(32)) {
        let n = a.n_rows();
        let t = extract_tridiagonal(&a).unwrap();
        let u = cholesky_bidiagonal(&t).unwrap();
        let (z, _flops) = truncated_inverse_factor(&u, n - 1).unwrap();

        let mut dense_u = DMatrix::zeros(n, n);
        for k in 0..n {
            dense_u[(k, k)] = u.diag[k];
            if k + 1 < n {
                dense_u[(k, k + 1)] = u.sup[k];
            }
        }
        let want = dense_upper_inverse(&dense_u);
        for r in 0..n {
            for c in 0..n {
                let got = z.get(r, c).unwrap_or(0.0);
                prop_assert!((got - want[(r, c)]).abs() <= 1e-12 * (1.0 + want[(r, c)].abs()));
            }
        }
        // Entry magnitudes shrink strictly while moving up a column.
        for k in 0..n {
            for r in 1..=k {
                prop_assert!(z.get(r - 1, k).unwrap().abs() < z.get(r, k).unwrap().abs());
            }
        }
    }

    #[test]
    fn orthogonalized_and_closed_form_factors_agree_untruncated(a in dd_tridiagonal(24)) {
        let n = a.n_rows();
        let via_mgs = FactoredInverse::from_matrix(&a, n - 1).unwrap();
        let via_formula = FactoredInverse::from_matrix_closed_form(&a, n - 1).unwrap();
        for r in 0..n {
            for c in 0..n {
                let x = via_mgs.z().get(r, c).unwrap_or(0.0);
                let y = via_formula.z().get(r, c).unwrap_or(0.0);
                prop_assert!((x - y).abs() <= 1e-10 * (1.0 + y.abs()));
            }
        }
    }

    #[test]
    fn factored_application_is_symmetric(a in dd_tridiagonal(32), seed in 0..u32::MAX) {
        let n = a.n_rows();
        let m = FactoredInverse::from_matrix(&a, 2.min(n - 1)).unwrap();
        let mut x: Vec<f64> = (0..n).map(|k| ((seed as f64) * 0.11 + k as f64).sin()).collect();
        let mut y: Vec<f64> = (0..n).map(|k| ((seed as f64) * 0.23 - k as f64).cos()).collect();
        let nx = nrm2(&x);
        let ny = nrm2(&y);
        x.iter_mut().for_each(|v| *v /= nx);
        y.iter_mut().for_each(|v| *v /= ny);
        let px = m.apply(&x).unwrap();
        let py = m.apply(&y).unwrap();
        let lhs = dot(&px, &y).unwrap();
        let rhs = dot(&x, &py).unwrap();
        prop_assert!((lhs - rhs).abs() <= 1e-10);
    }

    #[test]
    fn zero_tolerance_biconjugation_inverts_exactly(a in dd_symmetric(8), seed in 0..u32::MAX) {
        let n = a.n_rows();
        let m = ainv::ainv_drop(&a, 0.0).unwrap();
        let v: Vec<f64> = (0..n).map(|k| ((seed as f64) * 0.07 + 1.3 * k as f64).sin()).collect();
        let av = a.spmv(&v).unwrap();
        let back = m.apply(&av).unwrap();
        for k in 0..n {
            prop_assert!((back[k] - v[k]).abs() <= 1e-8 * (1.0 + v[k].abs()));
        }
    }
}

#[test]
fn cholesky_of_the_uniform_second_difference_matches_frozen_values() {
    let a = CsrMatrix::from_coo(
        3,
        3,
        &[
            (0, 0, 2.0f64),
            (0, 1, -1.0),
            (1, 0, -1.0),
            (1, 1, 2.0),
            (1, 2, -1.0),
            (2, 1, -1.0),
            (2, 2, 2.0),
        ],
    )
    .unwrap();
    let u = cholesky_bidiagonal(&extract_tridiagonal(&a).unwrap()).unwrap();
    assert!((u.diag[0] - 1.414214).abs() < 1e-6);
    assert!((u.sup[0] - -0.707107).abs() < 1e-6);
    assert!((u.diag[1] - 1.224745).abs() < 1e-6);
    assert!((u.sup[1] - -0.816497).abs() < 1e-6);
    assert!((u.diag[2] - 1.154701).abs() < 1e-6);
}

#[test]
fn truncated_inverse_last_column_matches_frozen_values() {
    let a = CsrMatrix::from_coo(
        3,
        3,
        &[
            (0, 0, 2.0f64),
            (0, 1, -1.0),
            (1, 0, -1.0),
            (1, 1, 2.0),
            (1, 2, -1.0),
            (2, 1, -1.0),
            (2, 2, 2.0),
        ],
    )
    .unwrap();
    let u = cholesky_bidiagonal(&extract_tridiagonal(&a).unwrap()).unwrap();

    let (full, _) = truncated_inverse_factor(&u, 2).unwrap();
    assert!((full.get(2, 2).unwrap() - 0.866025).abs() < 1e-6);
    assert!((full.get(1, 2).unwrap() - 0.577350).abs() < 1e-6);
    assert!((full.get(0, 2).unwrap() - 0.288675).abs() < 1e-6);

    // One-band truncation keeps the two entries nearest the diagonal and
    // drops the third, leaving the kept values untouched.
    let (narrow, _) = truncated_inverse_factor(&u, 1).unwrap();
    assert_eq!(narrow.get(0, 2), None);
    assert_eq!(narrow.get(1, 2), full.get(1, 2));
    assert_eq!(narrow.get(2, 2), full.get(2, 2));
}

#[test]
fn band_limit_spectrum_matches_a_dense_eigensolver() {
    for n in 1..=50usize {
        let a: CsrMatrix<f64> = limit_matrix(n).unwrap();
        let mut dense_eigs: Vec<f64> = dense_from_csr(&a)
            .symmetric_eigen()
            .eigenvalues
            .iter()
            .copied()
            .collect();
        dense_eigs.sort_by(|x, y| y.partial_cmp(x).unwrap());
        let want = limit_eigenvalues(n);
        assert_eq!(want.len(), n);
        for (got, want) in dense_eigs.iter().zip(&want) {
            assert!(
                (got - want).abs() <= 1e-12,
                "n = {n}: dense {got} vs closed form {want}"
            );
        }
    }
}

#[test]
fn band_limit_conditioning_tracks_the_quadratic_window() {
    for n in [100usize, 128, 200, 333, 500] {
        let scaled = limit_condition_number(n) / ((n + 1) * (n + 1)) as f64;
        assert!(
            (0.39..=0.42).contains(&scaled),
            "n = {n}: cond / (n+1)^2 = {scaled}"
        );
    }
}
