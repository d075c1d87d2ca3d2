//! Compressed sparse row matrices.
//!
//! Storage is the classic three-array CSR layout. Rows are contiguous; the
//! column indices of every row are sorted and unique, and all stored values
//! are finite. Those invariants are established at construction and every
//! operation preserves them.

use crate::error::Error;
use crate::scalar::Scalar;

/// Dense vector carried alongside the sparse types.
pub type DenseVector<T> = Vec<T>;

/// Sparse matrix in compressed sparse row form.
///
/// `row_start` has `n_rows + 1` entries; row `i` occupies the half-open
/// index range `row_start[i] .. row_start[i + 1]` of `col_index`/`values`.
#[derive(Debug, Clone, PartialEq)]
pub struct CsrMatrix<T> {
    n_rows: usize,
    n_cols: usize,
    row_start: Vec<usize>,
    col_index: Vec<usize>,
    values: Vec<T>,
}

impl<T: Scalar> CsrMatrix<T> {
    /// Builds a matrix from raw CSR arrays, validating every invariant.
    ///
    /// # Errors
    ///
    /// [`Error::Structure`] if the arrays are inconsistent, a row has
    /// unsorted or repeated columns, or a value is not finite;
    /// [`Error::IndexOutOfRange`] if a column index exceeds the shape.
    pub fn new(
        n_rows: usize,
        n_cols: usize,
        row_start: Vec<usize>,
        col_index: Vec<usize>,
        values: Vec<T>,
    ) -> Result<Self, Error> {
        if row_start.len() != n_rows + 1 {
            return Err(Error::Structure(format!(
                "row_start has {} entries, expected {}",
                row_start.len(),
                n_rows + 1
            )));
        }
        if col_index.len() != values.len() {
            return Err(Error::Structure(format!(
                "col_index has {} entries but values has {}",
                col_index.len(),
                values.len()
            )));
        }
        if row_start[0] != 0 || row_start[n_rows] != col_index.len() {
            return Err(Error::Structure(
                "row_start must begin at 0 and end at nnz".into(),
            ));
        }
        for i in 0..n_rows {
            if row_start[i] > row_start[i + 1] {
                return Err(Error::Structure(format!(
                    "row_start decreases at row {i}"
                )));
            }
            let row = &col_index[row_start[i]..row_start[i + 1]];
            for (k, &c) in row.iter().enumerate() {
                if c >= n_cols {
                    return Err(Error::IndexOutOfRange {
                        row: i,
                        col: c,
                        n_rows,
                        n_cols,
                    });
                }
                if k > 0 && row[k - 1] >= c {
                    return Err(Error::Structure(format!(
                        "columns of row {i} are not strictly increasing"
                    )));
                }
            }
        }
        if let Some(v) = values.iter().find(|v| !v.is_finite()) {
            return Err(Error::Structure(format!("non-finite value {v}")));
        }
        Ok(Self {
            n_rows,
            n_cols,
            row_start,
            col_index,
            values,
        })
    }

    /// Builds a matrix from coordinate-format triplets.
    ///
    /// # Errors
    ///
    /// [`Error::IndexOutOfRange`] for an entry outside the declared shape,
    /// [`Error::DuplicateEntry`] for a repeated `(row, col)` pair, and
    /// [`Error::Structure`] for a non-finite value.
    pub fn from_coo(
        n_rows: usize,
        n_cols: usize,
        entries: &[(usize, usize, T)],
    ) -> Result<Self, Error> {
        for &(r, c, v) in entries {
            if r >= n_rows || c >= n_cols {
                return Err(Error::IndexOutOfRange {
                    row: r,
                    col: c,
                    n_rows,
                    n_cols,
                });
            }
            if !v.is_finite() {
                return Err(Error::Structure(format!(
                    "non-finite value {v} at ({r}, {c})"
                )));
            }
        }
        let mut sorted: Vec<&(usize, usize, T)> = entries.iter().collect();
        sorted.sort_by_key(|&&(r, c, _)| (r, c));
        for pair in sorted.windows(2) {
            if pair[0].0 == pair[1].0 && pair[0].1 == pair[1].1 {
                return Err(Error::DuplicateEntry {
                    row: pair[0].0,
                    col: pair[0].1,
                });
            }
        }
        let mut row_start = vec![0usize; n_rows + 1];
        for &&(r, _, _) in &sorted {
            row_start[r + 1] += 1;
        }
        for i in 0..n_rows {
            row_start[i + 1] += row_start[i];
        }
        let mut col_index = Vec::with_capacity(sorted.len());
        let mut values = Vec::with_capacity(sorted.len());
        for &(_, c, v) in sorted {
            col_index.push(c);
            values.push(v);
        }
        Ok(Self {
            n_rows,
            n_cols,
            row_start,
            col_index,
            values,
        })
    }

    /// Identity matrix of order `n`.
    pub fn identity(n: usize) -> Self {
        Self {
            n_rows: n,
            n_cols: n,
            row_start: (0..=n).collect(),
            col_index: (0..n).collect(),
            values: vec![T::one(); n],
        }
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_cols(&self) -> usize {
        self.n_cols
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn row_start(&self) -> &[usize] {
        &self.row_start
    }

    pub fn col_index(&self) -> &[usize] {
        &self.col_index
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    /// Column indices and values of row `i`.
    pub fn row(&self, i: usize) -> (&[usize], &[T]) {
        let span = self.row_start[i]..self.row_start[i + 1];
        (&self.col_index[span.clone()], &self.values[span])
    }

    /// Stored value at `(i, j)`, or `None` when the position holds no entry.
    pub fn get(&self, i: usize, j: usize) -> Option<T> {
        let (cols, vals) = self.row(i);
        cols.binary_search(&j).ok().map(|k| vals[k])
    }

    /// Matrix-vector product `A x`.
    ///
    /// Each row accumulates left to right in storage order, so the result is
    /// identical from run to run.
    ///
    /// # Errors
    ///
    /// Returns [`Error::DimensionMismatch`] if `x` does not match `n_cols`.
    pub fn spmv(&self, x: &[T]) -> Result<DenseVector<T>, Error> {
        if x.len() != self.n_cols {
            return Err(Error::DimensionMismatch {
                left: self.n_cols,
                right: x.len(),
            });
        }
        let mut y = vec![T::zero(); self.n_rows];
        self.spmv_into(x, &mut y);
        Ok(y)
    }

    /// In-place variant of [`CsrMatrix::spmv`] for pre-validated callers.
    pub fn spmv_into(&self, x: &[T], y: &mut [T]) {
        debug_assert_eq!(x.len(), self.n_cols);
        debug_assert_eq!(y.len(), self.n_rows);
        for i in 0..self.n_rows {
            let mut acc = T::zero();
            for k in self.row_start[i]..self.row_start[i + 1] {
                acc = acc + self.values[k] * x[self.col_index[k]];
            }
            y[i] = acc;
        }
    }

    /// Transposed copy. Values are moved bit-exactly; no arithmetic runs.
    pub fn transpose(&self) -> CsrMatrix<T> {
        let mut row_start = vec![0usize; self.n_cols + 1];
        for &c in &self.col_index {
            row_start[c + 1] += 1;
        }
        for i in 0..self.n_cols {
            row_start[i + 1] += row_start[i];
        }
        let mut fill = row_start.clone();
        let mut col_index = vec![0usize; self.nnz()];
        let mut values = vec![T::zero(); self.nnz()];
        for i in 0..self.n_rows {
            for k in self.row_start[i]..self.row_start[i + 1] {
                let c = self.col_index[k];
                col_index[fill[c]] = i;
                values[fill[c]] = self.values[k];
                fill[c] += 1;
            }
        }
        CsrMatrix {
            n_rows: self.n_cols,
            n_cols: self.n_rows,
            row_start,
            col_index,
            values,
        }
    }

    /// Whether the matrix equals its transpose exactly (structure and bits).
    pub fn is_symmetric(&self) -> bool {
        self.n_rows == self.n_cols && *self == self.transpose()
    }
}
