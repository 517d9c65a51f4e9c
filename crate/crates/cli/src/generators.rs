//! Test matrices: row-decaying dense and sparse Gaussian matrices, and the
//! inverse-distance kernel between two adjacent unit grids.

use arpivot::{DenseMatrix, Error, Result, SparseMatrix};
use rand::seq::index;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

fn decay(i: usize) -> f64 {
    let r = (i + 1) as f64;
    1.0 / (r * r)
}

/// `m × n` matrix of independent standard Gaussians, column-major draw order.
pub fn gaussian<R: Rng + ?Sized>(m: usize, n: usize, rng: &mut R) -> DenseMatrix {
    DenseMatrix::from_fn(m, n, |_, _| StandardNormal.sample(rng))
}

/// `diag(i⁻²) G` for an `m × n` standard Gaussian `G`. Entries are drawn in
/// column-major order.
pub fn gen_decay_dense<R: Rng + ?Sized>(m: usize, n: usize, rng: &mut R) -> DenseMatrix {
    let mut a = gaussian(m, n, rng);
    for (i, mut row) in a.row_iter_mut().enumerate() {
        row *= decay(i);
    }
    a
}

/// Sparse analogue of [`gen_decay_dense`]: every column has `nnz_per_col`
/// distinct uniformly placed rows with Gaussian values, and row `i` is then
/// scaled by `i⁻²`.
pub fn gen_decay_sparse<R: Rng + ?Sized>(m: usize, n: usize, nnz_per_col: usize, rng: &mut R) -> Result<SparseMatrix> {
    if m == 0 || n == 0 || nnz_per_col == 0 || nnz_per_col > m {
        return Err(Error::InvalidParam(format!(
            "need 1 <= nnz per column <= m, got {nnz_per_col} for a {m}x{n} matrix"
        )));
    }
    let mut offsets = Vec::with_capacity(n + 1);
    let mut rows = Vec::with_capacity(n * nnz_per_col);
    let mut values = Vec::with_capacity(n * nnz_per_col);
    offsets.push(0);
    for _ in 0..n {
        let mut support = index::sample(rng, m, nnz_per_col).into_vec();
        support.sort_unstable();
        for i in support {
            let g: f64 = StandardNormal.sample(rng);
            rows.push(i);
            values.push(decay(i) * g);
        }
        offsets.push(rows.len());
    }
    SparseMatrix::new(m, n, offsets, rows, values)
}

/// Point `p = a + g·b` of the `g × g` grid with spacing `1/g` and origin
/// `(x0, 0)`.
pub fn grid_point(g: usize, p: usize, x0: f64) -> (f64, f64) {
    let h = 1.0 / g as f64;
    (x0 + (p % g) as f64 * h, (p / g) as f64 * h)
}

/// `A(i,j) = 1/‖x_i − y_j‖` with `x` on the grid over `[0,1)²` and `y` on the
/// grid over `[1,2) × [0,1)`. Size `g² × g²`.
pub fn gen_kernel(g: usize) -> DenseMatrix {
    let n = g * g;
    DenseMatrix::from_fn(n, n, |i, j| {
        let (x1, x2) = grid_point(g, i, 0.0);
        let (y1, y2) = grid_point(g, j, 1.0);
        1.0 / (x1 - y1).hypot(x2 - y2)
    })
}
