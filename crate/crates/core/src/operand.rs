//! The operations the decomposition pipeline needs from its input matrix,
//! implemented for dense and sparse storage.

use crate::error::{shape_mismatch, Result};
use crate::linalg::DenseMatrix;
use crate::sketch::SparseStack;
use crate::sparse::SparseMatrix;

/// An `m × n` input matrix from which rows are selected.
pub trait MatrixOperand {
    fn nrows(&self) -> usize;
    fn ncols(&self) -> usize;

    /// `A Ω`.
    fn sketch(&self, emb: &SparseStack) -> Result<DenseMatrix>;

    /// `A X` for a dense `n × p` matrix `X`.
    fn mul_dense(&self, x: &DenseMatrix) -> Result<DenseMatrix>;

    /// Dense copy of the given (distinct) rows, in order.
    fn select_rows(&self, rows: &[usize]) -> DenseMatrix;

    /// Dense copy of columns `start..start + len`.
    fn columns_dense(&self, start: usize, len: usize) -> DenseMatrix;

    fn frobenius_norm(&self) -> f64;

    fn shape(&self) -> (usize, usize) {
        (self.nrows(), self.ncols())
    }
}

impl MatrixOperand for DenseMatrix {
    fn nrows(&self) -> usize {
        self.nrows()
    }

    fn ncols(&self) -> usize {
        self.ncols()
    }

    fn sketch(&self, emb: &SparseStack) -> Result<DenseMatrix> {
        emb.apply_right_dense(self)
    }

    fn mul_dense(&self, x: &DenseMatrix) -> Result<DenseMatrix> {
        if x.nrows() != self.ncols() {
            return Err(shape_mismatch((self.ncols(), x.ncols()), x.shape()));
        }
        Ok(self * x)
    }

    fn select_rows(&self, rows: &[usize]) -> DenseMatrix {
        DenseMatrix::select_rows(self, rows)
    }

    fn columns_dense(&self, start: usize, len: usize) -> DenseMatrix {
        self.columns(start, len).into_owned()
    }

    fn frobenius_norm(&self) -> f64 {
        self.norm()
    }
}

impl MatrixOperand for SparseMatrix {
    fn nrows(&self) -> usize {
        self.nrows()
    }

    fn ncols(&self) -> usize {
        self.ncols()
    }

    fn sketch(&self, emb: &SparseStack) -> Result<DenseMatrix> {
        emb.apply_right_sparse(self)
    }

    fn mul_dense(&self, x: &DenseMatrix) -> Result<DenseMatrix> {
        SparseMatrix::mul_dense(self, x)
    }

    fn select_rows(&self, rows: &[usize]) -> DenseMatrix {
        SparseMatrix::select_rows(self, rows)
    }

    fn columns_dense(&self, start: usize, len: usize) -> DenseMatrix {
        SparseMatrix::columns_dense(self, start, len)
    }

    fn frobenius_norm(&self) -> f64 {
        SparseMatrix::frobenius_norm(self)
    }
}
