//! SparseStack sign embeddings, applied implicitly.
//!
//! A SparseStack `Ω ∈ ℝ^{n×k}` with row sparsity `ζ` splits its `k` columns
//! into `ζ` contiguous blocks of width `b = k/ζ`. Row `i` has exactly one
//! nonzero in every block, at a uniformly random offset, with value
//! `±ζ^{-1/2}` and an independent random sign. Every row has unit norm.

use rand::Rng;

use crate::error::{shape_mismatch, Error, Result};
use crate::linalg::DenseMatrix;
use crate::sparse::SparseMatrix;

/// Default row sparsity.
pub const DEFAULT_ZETA: usize = 4;

/// Smallest multiple of `zeta` that is at least `k`.
pub fn round_up_to_multiple(k: usize, zeta: usize) -> usize {
    k.div_ceil(zeta) * zeta
}

#[derive(Clone, Debug, PartialEq)]
pub struct SparseStack {
    n: usize,
    k: usize,
    zeta: usize,
    // n × zeta, row-major: absolute column index of the nonzero of row i in block j
    columns: Vec<usize>,
    // n × zeta, row-major: ±1
    signs: Vec<i8>,
    scale: f64,
}

impl SparseStack {
    /// Draws an embedding. Random numbers are consumed row by row; within a
    /// row, block by block, first the sign and then the offset inside the block.
    pub fn new<R: Rng + ?Sized>(n: usize, k: usize, zeta: usize, rng: &mut R) -> Result<Self> {
        if n == 0 || k == 0 {
            return Err(Error::InvalidParam("embedding dimensions must be positive".into()));
        }
        if zeta == 0 || zeta > k || k % zeta != 0 {
            return Err(Error::InvalidSparsity { k, zeta });
        }
        let b = k / zeta;
        let mut columns = Vec::with_capacity(n * zeta);
        let mut signs = Vec::with_capacity(n * zeta);
        for _ in 0..n {
            for block in 0..zeta {
                let sign = if rng.random::<bool>() { 1 } else { -1 };
                let offset = rng.random_range(0..b);
                signs.push(sign);
                columns.push(block * b + offset);
            }
        }
        Ok(Self { n, k, zeta, columns, signs, scale: 1.0 / (zeta as f64).sqrt() })
    }

    /// Input dimension (rows of Ω).
    pub fn input_dim(&self) -> usize {
        self.n
    }

    /// Embedding dimension (columns of Ω).
    pub fn embedding_dim(&self) -> usize {
        self.k
    }

    pub fn zeta(&self) -> usize {
        self.zeta
    }

    pub fn block_width(&self) -> usize {
        self.k / self.zeta
    }

    /// Signs of row `i`, one per block.
    pub fn signs(&self, i: usize) -> &[i8] {
        &self.signs[i * self.zeta..(i + 1) * self.zeta]
    }

    /// Zero-based offsets of row `i`'s nonzeros within their blocks.
    pub fn block_indices(&self, i: usize) -> Vec<usize> {
        let b = self.block_width();
        self.columns[i * self.zeta..(i + 1) * self.zeta]
            .iter()
            .map(|&c| c % b)
            .collect()
    }

    fn row_entries(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let span = i * self.zeta..(i + 1) * self.zeta;
        self.columns[span.clone()]
            .iter()
            .zip(&self.signs[span])
            .map(move |(&c, &s)| (c, f64::from(s) * self.scale))
    }

    /// Explicit `n × k` sparse matrix.
    pub fn materialize(&self) -> SparseMatrix {
        let triplets: Vec<_> = (0..self.n)
            .flat_map(|i| self.row_entries(i).map(move |(c, v)| (i, c, v)))
            .collect();
        SparseMatrix::from_triplets(self.n, self.k, &triplets).expect("embedding entries are in range")
    }

    /// `A Ω` for dense `A`, in `O(ζ·m·n)` operations.
    pub fn apply_right_dense(&self, a: &DenseMatrix) -> Result<DenseMatrix> {
        if a.ncols() != self.n {
            return Err(shape_mismatch((a.nrows(), self.n), a.shape()));
        }
        let m = a.nrows();
        let mut out = DenseMatrix::zeros(m, self.k);
        let dst = out.as_mut_slice();
        for j in 0..self.n {
            let src = a.column(j);
            let src = src.as_slice();
            for (c, v) in self.row_entries(j) {
                for (o, &x) in dst[c * m..(c + 1) * m].iter_mut().zip(src) {
                    *o += x * v;
                }
            }
        }
        Ok(out)
    }

    /// `A Ω` for sparse `A`, in `O(ζ·nnz(A))` operations.
    pub fn apply_right_sparse(&self, a: &SparseMatrix) -> Result<DenseMatrix> {
        if a.ncols() != self.n {
            return Err(shape_mismatch((a.nrows(), self.n), a.shape()));
        }
        let m = a.nrows();
        let mut out = DenseMatrix::zeros(m, self.k);
        let dst = out.as_mut_slice();
        for j in 0..self.n {
            let (rows, vals) = a.column(j);
            for (c, v) in self.row_entries(j) {
                let col = &mut dst[c * m..(c + 1) * m];
                for (&i, &x) in rows.iter().zip(vals) {
                    col[i] += x * v;
                }
            }
        }
        Ok(out)
    }
}
