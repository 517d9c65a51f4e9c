//! Column-compressed sparse matrices.

use crate::error::{shape_mismatch, Error, Result};
use crate::linalg::{column_slice_mut, DenseMatrix};

/// Real sparse matrix in compressed sparse column form. Row indices are
/// strictly increasing within each column.
#[derive(Clone, Debug, PartialEq)]
pub struct SparseMatrix {
    nrows: usize,
    ncols: usize,
    col_offsets: Vec<usize>,
    row_indices: Vec<usize>,
    values: Vec<f64>,
}

impl SparseMatrix {
    pub fn new(
        nrows: usize,
        ncols: usize,
        col_offsets: Vec<usize>,
        row_indices: Vec<usize>,
        values: Vec<f64>,
    ) -> Result<Self> {
        if col_offsets.len() != ncols + 1 || col_offsets[0] != 0 {
            return Err(Error::InvalidParam("column offsets must have ncols + 1 entries starting at 0".into()));
        }
        if col_offsets.windows(2).any(|w| w[0] > w[1]) {
            return Err(Error::InvalidParam("column offsets must be nondecreasing".into()));
        }
        let nnz = col_offsets[ncols];
        if row_indices.len() != nnz || values.len() != nnz {
            return Err(Error::InvalidParam(format!(
                "expected {nnz} stored entries, found {} indices and {} values",
                row_indices.len(),
                values.len()
            )));
        }
        for j in 0..ncols {
            let rows = &row_indices[col_offsets[j]..col_offsets[j + 1]];
            if rows.windows(2).any(|w| w[0] >= w[1]) {
                return Err(Error::InvalidParam(format!("row indices of column {j} are not strictly increasing")));
            }
            if rows.last().is_some_and(|&r| r >= nrows) {
                return Err(Error::InvalidParam(format!("row index out of range in column {j}")));
            }
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidParam("sparse values must be finite".into()));
        }
        Ok(Self { nrows, ncols, col_offsets, row_indices, values })
    }

    /// Builds a matrix from `(row, col, value)` triplets; duplicates are summed.
    pub fn from_triplets(nrows: usize, ncols: usize, triplets: &[(usize, usize, f64)]) -> Result<Self> {
        let mut sorted: Vec<_> = triplets.to_vec();
        if sorted.iter().any(|&(i, j, _)| i >= nrows || j >= ncols) {
            return Err(Error::InvalidParam("triplet index out of range".into()));
        }
        sorted.sort_by_key(|&(i, j, _)| (j, i));
        let mut col_offsets = vec![0; ncols + 1];
        let mut row_indices = Vec::with_capacity(sorted.len());
        let mut values: Vec<f64> = Vec::with_capacity(sorted.len());
        let mut last: Option<(usize, usize)> = None;
        for (i, j, v) in sorted {
            if last == Some((i, j)) {
                *values.last_mut().unwrap() += v;
                continue;
            }
            row_indices.push(i);
            values.push(v);
            col_offsets[j + 1] += 1;
            last = Some((i, j));
        }
        for j in 0..ncols {
            col_offsets[j + 1] += col_offsets[j];
        }
        Self::new(nrows, ncols, col_offsets, row_indices, values)
    }

    pub fn identity(n: usize) -> Self {
        Self {
            nrows: n,
            ncols: n,
            col_offsets: (0..=n).collect(),
            row_indices: (0..n).collect(),
            values: vec![1.0; n],
        }
    }

    pub fn from_dense(a: &DenseMatrix) -> Self {
        let mut col_offsets = Vec::with_capacity(a.ncols() + 1);
        let mut row_indices = Vec::new();
        let mut values = Vec::new();
        col_offsets.push(0);
        for col in a.column_iter() {
            for (i, &v) in col.iter().enumerate() {
                if v != 0.0 {
                    row_indices.push(i);
                    values.push(v);
                }
            }
            col_offsets.push(row_indices.len());
        }
        Self { nrows: a.nrows(), ncols: a.ncols(), col_offsets, row_indices, values }
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.nrows, self.ncols)
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn col_offsets(&self) -> &[usize] {
        &self.col_offsets
    }

    /// Row indices and values of column `j`.
    pub fn column(&self, j: usize) -> (&[usize], &[f64]) {
        let range = self.col_offsets[j]..self.col_offsets[j + 1];
        (&self.row_indices[range.clone()], &self.values[range])
    }

    pub fn to_dense(&self) -> DenseMatrix {
        self.columns_dense(0, self.ncols)
    }

    /// Dense copy of columns `start..start + len`.
    pub fn columns_dense(&self, start: usize, len: usize) -> DenseMatrix {
        let mut out = DenseMatrix::zeros(self.nrows, len);
        for (c, j) in (start..start + len).enumerate() {
            let (rows, vals) = self.column(j);
            for (&i, &v) in rows.iter().zip(vals) {
                out[(i, c)] = v;
            }
        }
        out
    }

    /// `self · x` for a dense `x`.
    pub fn mul_dense(&self, x: &DenseMatrix) -> Result<DenseMatrix> {
        if x.nrows() != self.ncols {
            return Err(shape_mismatch((self.ncols, x.ncols()), x.shape()));
        }
        let mut out = DenseMatrix::zeros(self.nrows, x.ncols());
        for c in 0..x.ncols() {
            let dst = column_slice_mut(&mut out, c);
            for j in 0..self.ncols {
                let xj = x[(j, c)];
                if xj == 0.0 {
                    continue;
                }
                let (rows, vals) = self.column(j);
                for (&i, &v) in rows.iter().zip(vals) {
                    dst[i] += v * xj;
                }
            }
        }
        Ok(out)
    }

    /// Dense `|rows| × ncols` matrix of the selected rows, in the given order.
    /// The indices must be distinct.
    pub fn select_rows(&self, rows: &[usize]) -> DenseMatrix {
        let mut position = vec![usize::MAX; self.nrows];
        for (p, &r) in rows.iter().enumerate() {
            debug_assert!(position[r] == usize::MAX, "repeated row index {r}");
            position[r] = p;
        }
        let mut out = DenseMatrix::zeros(rows.len(), self.ncols);
        for j in 0..self.ncols {
            let (idx, vals) = self.column(j);
            for (&i, &v) in idx.iter().zip(vals) {
                if position[i] != usize::MAX {
                    out[(position[i], j)] = v;
                }
            }
        }
        out
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum::<f64>().sqrt()
    }
}
