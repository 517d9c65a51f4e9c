//! Dense kernels: orthonormalization, an append-only Householder QR, and
//! pseudoinverse application through QR.
//!
//! All dense matrices are `nalgebra::DMatrix<f64>`, which stores entries in
//! column-major order. Every routine in the crate relies on that layout, and
//! seeded runs are reproducible bit for bit because of it.

use nalgebra::DMatrix;

use crate::error::{shape_mismatch, Error, Result};

/// Dense real matrix, column-major.
pub type DenseMatrix = DMatrix<f64>;

/// Relative threshold below which a triangular diagonal entry counts as zero.
pub const RANK_TOL: f64 = 1e-12;

/// `Aᵀ B` as a blocked matrix product.
pub fn gemm_tn(a: &DenseMatrix, b: &DenseMatrix) -> DenseMatrix {
    a.transpose() * b
}

/// Column `j` of `m` as a mutable slice.
pub(crate) fn column_slice_mut(m: &mut DenseMatrix, j: usize) -> &mut [f64] {
    let n = m.nrows();
    &mut m.as_mut_slice()[j * n..(j + 1) * n]
}

/// Overwrites `x` with the Householder vector `v` (with `v[0] = 1`) such that
/// `(I - tau v vᵀ) x = beta e₁`, and returns `(tau, beta)`.
pub(crate) fn householder(x: &mut [f64]) -> (f64, f64) {
    let alpha = x[0];
    let tail: f64 = x[1..].iter().map(|v| v * v).sum();
    if tail == 0.0 {
        x[0] = 1.0;
        return (0.0, alpha);
    }
    let norm = (alpha * alpha + tail).sqrt();
    let beta = if alpha >= 0.0 { -norm } else { norm };
    let tau = (beta - alpha) / beta;
    let scale = 1.0 / (alpha - beta);
    for v in &mut x[1..] {
        *v *= scale;
    }
    x[0] = 1.0;
    (tau, beta)
}

#[derive(Clone, Copy, Debug)]
enum Breakdown {
    /// Reject the whole update if any new diagonal is tiny relative to its column.
    PerColumn,
    /// Absorb columns until the first diagonal at or below the absolute threshold.
    StopAt(f64),
}

/// Householder QR factorization of a growing set of columns in `ℝᵈ`.
///
/// The orthogonal factor `H₁H₂⋯H_k` is kept as packed reflectors together with
/// the compact-WY triangle `T`, so that `H₁⋯H_k = I − V T Vᵀ` and every
/// application is a pair of matrix–matrix products. It is never formed
/// explicitly by the factorization itself.
#[derive(Clone, Debug)]
pub struct HouseholderQr {
    dim: usize,
    // dim × k; column j is zero above row j and has a unit entry at row j.
    reflectors: DenseMatrix,
    tau: Vec<f64>,
    r: DenseMatrix,
    t: DenseMatrix,
}

impl HouseholderQr {
    /// Empty factorization in ambient dimension `dim`.
    pub fn empty(dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidParam("QR ambient dimension must be positive".into()));
        }
        Ok(Self {
            dim,
            reflectors: DenseMatrix::zeros(dim, 0),
            tau: Vec::new(),
            r: DenseMatrix::zeros(0, 0),
            t: DenseMatrix::zeros(0, 0),
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Number of absorbed columns.
    pub fn rank(&self) -> usize {
        self.tau.len()
    }

    /// Upper-triangular factor of the absorbed columns.
    pub fn r(&self) -> &DenseMatrix {
        &self.r
    }

    /// Appends `cols` to the factorization. Reflectors already stored are not
    /// touched. On error the factorization is left unchanged.
    pub fn update(&mut self, cols: &DenseMatrix) -> Result<()> {
        self.absorb(cols, Breakdown::PerColumn).map(|_| ())
    }

    /// Like [`update`](Self::update), for columns already multiplied by
    /// `(H₁⋯H_k)ᵀ`.
    pub(crate) fn update_rotated(&mut self, rotated: DenseMatrix) -> Result<()> {
        self.absorb_rotated(rotated, Breakdown::PerColumn).map(|_| ())
    }

    fn absorb(&mut self, cols: &DenseMatrix, breakdown: Breakdown) -> Result<usize> {
        let y = self.apply_qt(cols)?;
        self.absorb_rotated(y, breakdown)
    }

    fn absorb_rotated(&mut self, mut y: DenseMatrix, breakdown: Breakdown) -> Result<usize> {
        if y.nrows() != self.dim {
            return Err(shape_mismatch((self.dim, y.ncols()), y.shape()));
        }
        let k0 = self.rank();
        let p = y.ncols();
        if k0 + p > self.dim {
            return Err(Error::DimensionMismatch {
                expected: format!("at most {} new columns", self.dim - k0),
                found: format!("{p} columns"),
            });
        }
        if p == 0 {
            return Ok(0);
        }

        let norms: Vec<f64> = y.column_iter().map(|c| c.norm()).collect();
        let mut new_v = DenseMatrix::zeros(self.dim, p);
        let mut new_tau = Vec::with_capacity(p);
        let mut new_r = DenseMatrix::zeros(k0 + p, p);
        let mut buf = vec![0.0; self.dim];

        let mut accepted = 0;
        for j in 0..p {
            let c = k0 + j;
            let len = self.dim - c;
            let x = &mut buf[..len];
            x.copy_from_slice(&y.column(j).as_slice()[c..]);
            let (tau, beta) = householder(x);
            let tiny = match breakdown {
                Breakdown::PerColumn => beta.abs() <= RANK_TOL * norms[j],
                Breakdown::StopAt(tol) => beta.abs() <= tol,
            };
            if tiny {
                match breakdown {
                    Breakdown::PerColumn => return Err(Error::RankDeficientUpdate { column: j }),
                    Breakdown::StopAt(_) => break,
                }
            }
            for i in 0..c {
                new_r[(i, j)] = y[(i, j)];
            }
            new_r[(c, j)] = beta;
            new_v.column_mut(j).as_mut_slice()[c..].copy_from_slice(x);
            new_tau.push(tau);

            if tau != 0.0 {
                for l in (j + 1)..p {
                    let col = &mut column_slice_mut(&mut y, l)[c..];
                    let s: f64 = x.iter().zip(col.iter()).map(|(a, b)| a * b).sum();
                    let f = tau * s;
                    for (yi, vi) in col.iter_mut().zip(x.iter()) {
                        *yi -= f * vi;
                    }
                }
            }
            accepted += 1;
        }

        self.commit(new_v, new_tau, new_r, accepted);
        Ok(accepted)
    }

    fn commit(&mut self, new_v: DenseMatrix, new_tau: Vec<f64>, new_r: DenseMatrix, count: usize) {
        if count == 0 {
            return;
        }
        let k0 = self.rank();
        let k1 = k0 + count;

        let mut reflectors = std::mem::replace(&mut self.reflectors, DenseMatrix::zeros(0, 0))
            .resize_horizontally(k1, 0.0);
        reflectors
            .columns_mut(k0, count)
            .copy_from(&new_v.columns(0, count));

        let mut r = std::mem::replace(&mut self.r, DenseMatrix::zeros(0, 0)).resize(k1, k1, 0.0);
        r.view_mut((0, k0), (k1, count))
            .copy_from(&new_r.view((0, 0), (k1, count)));

        let mut t = std::mem::replace(&mut self.t, DenseMatrix::zeros(0, 0)).resize(k1, k1, 0.0);
        for (j, &tau) in new_tau.iter().enumerate().take(count) {
            let c = k0 + j;
            if c > 0 {
                let z = reflectors.columns(0, c).tr_mul(&reflectors.column(c));
                let tz = t.view((0, 0), (c, c)) * z;
                for i in 0..c {
                    t[(i, c)] = -tau * tz[i];
                }
            }
            t[(c, c)] = tau;
        }

        self.reflectors = reflectors;
        self.r = r;
        self.t = t;
        self.tau.extend_from_slice(&new_tau[..count]);
    }

    fn check_rows(&self, m: &DenseMatrix) -> Result<()> {
        if m.nrows() != self.dim {
            return Err(shape_mismatch((self.dim, m.ncols()), m.shape()));
        }
        Ok(())
    }

    /// `(H₁⋯H_k)ᵀ M`.
    pub fn apply_qt(&self, m: &DenseMatrix) -> Result<DenseMatrix> {
        self.check_rows(m)?;
        if self.rank() == 0 {
            return Ok(m.clone());
        }
        let w = gemm_tn(&self.reflectors, m);
        let tw = gemm_tn(&self.t, &w);
        Ok(m - &self.reflectors * tw)
    }

    /// `(H₁⋯H_k) M`.
    pub fn apply_q(&self, m: &DenseMatrix) -> Result<DenseMatrix> {
        self.check_rows(m)?;
        if self.rank() == 0 {
            return Ok(m.clone());
        }
        let w = gemm_tn(&self.reflectors, m);
        let tw = &self.t * w;
        Ok(m - &self.reflectors * tw)
    }

    /// `(I − UUᵀ) M`, where `U` is the orthonormal basis of the absorbed columns.
    pub fn project_out(&self, m: &DenseMatrix) -> Result<DenseMatrix> {
        self.check_rows(m)?;
        if self.rank() == 0 {
            return Ok(m.clone());
        }
        let mut y = self.apply_qt(m)?;
        y.rows_mut(0, self.rank()).fill(0.0);
        self.apply_q(&y)
    }

    /// Leading `ncols` columns of the orthogonal factor.
    pub fn q_columns(&self, ncols: usize) -> DenseMatrix {
        let ncols = ncols.min(self.dim);
        let eye = DenseMatrix::identity(self.dim, ncols);
        self.apply_q(&eye).expect("identity has the ambient row count")
    }

    /// `Q [R; 0]`, i.e. the absorbed columns as the factorization represents them.
    pub fn reconstruct(&self) -> DenseMatrix {
        let k = self.rank();
        let mut padded = DenseMatrix::zeros(self.dim, k);
        padded.rows_mut(0, k).copy_from(&self.r);
        self.apply_q(&padded).expect("padded R has the ambient row count")
    }

    /// `R⁻¹ B` by back substitution.
    pub fn solve_r(&self, b: &DenseMatrix) -> Result<DenseMatrix> {
        if b.nrows() != self.rank() {
            return Err(shape_mismatch((self.rank(), b.ncols()), b.shape()));
        }
        self.r
            .solve_upper_triangular(b)
            .ok_or_else(|| Error::RankDeficient { context: "singular triangular factor".into() })
    }
}

/// Orthonormal basis for the range of `b` (rows ≥ cols).
///
/// Factorization stops at the first diagonal entry at or below
/// `RANK_TOL·‖B‖_F`; the returned matrix then has fewer columns than `b`.
pub fn orth(b: &DenseMatrix) -> Result<DenseMatrix> {
    if b.ncols() == 0 {
        return Err(Error::EmptyMatrix);
    }
    if b.nrows() < b.ncols() {
        return Err(Error::DimensionMismatch {
            expected: format!("at least {} rows", b.ncols()),
            found: format!("{} rows", b.nrows()),
        });
    }
    let mut qr = HouseholderQr::empty(b.nrows())?;
    let width = qr.absorb(b, Breakdown::StopAt(RANK_TOL * b.norm()))?;
    Ok(qr.q_columns(width))
}

/// QR factorization of `Bᵀ` for a `k × n` matrix `B` of full row rank, used to
/// apply `B†` from the right: `X B† = (X Q_B) R⁻ᵀ`.
#[derive(Clone, Debug)]
pub struct RowPseudoinverse {
    basis: DenseMatrix,
    qr: HouseholderQr,
}

impl RowPseudoinverse {
    pub fn new(b: &DenseMatrix) -> Result<Self> {
        let (k, n) = b.shape();
        if k == 0 {
            return Err(Error::EmptyMatrix);
        }
        if k > n {
            return Err(Error::DimensionMismatch {
                expected: format!("at most {n} rows"),
                found: format!("{k} rows"),
            });
        }
        let mut qr = HouseholderQr::empty(n)?;
        let absorbed = qr.absorb(&b.transpose(), Breakdown::StopAt(RANK_TOL * b.norm()))?;
        if absorbed < k {
            return Err(Error::RankDeficient {
                context: format!("numerical row rank {absorbed} < {k}"),
            });
        }
        let basis = qr.q_columns(k);
        Ok(Self { basis, qr })
    }

    /// Orthonormal basis `Q_B` (n × k) of the row space of `B`.
    pub fn basis(&self) -> &DenseMatrix {
        &self.basis
    }

    /// Given `X Q_B` (m × k), returns `X B†`.
    pub fn finish(&self, projected: &DenseMatrix) -> Result<DenseMatrix> {
        Ok(self.qr.solve_r(&projected.transpose())?.transpose())
    }
}

/// `A B†` computed through a QR factorization of `Bᵀ`.
pub fn apply_pinv_right(a: &DenseMatrix, b: &DenseMatrix) -> Result<DenseMatrix> {
    if a.ncols() != b.ncols() {
        return Err(shape_mismatch((a.nrows(), b.ncols()), a.shape()));
    }
    let pinv = RowPseudoinverse::new(b)?;
    pinv.finish(&(a * pinv.basis()))
}

/// `A B†` through a truncated SVD of `B`, discarding singular values below
/// `RANK_TOL·σ_max`. Used when `B` is numerically rank deficient.
pub fn apply_pinv_right_svd(a: &DenseMatrix, b: &DenseMatrix) -> Result<DenseMatrix> {
    if a.ncols() != b.ncols() {
        return Err(shape_mismatch((a.nrows(), b.ncols()), a.shape()));
    }
    let svd = b.clone().svd(true, true);
    let smax = svd.singular_values.max();
    let pinv = svd
        .pseudo_inverse(RANK_TOL * smax)
        .map_err(|e| Error::RankDeficient { context: e.to_string() })?;
    Ok(a * pinv)
}

/// Squared Euclidean norm of every row.
pub fn squared_row_norms(q: &DenseMatrix) -> Vec<f64> {
    let mut out = vec![0.0; q.nrows()];
    for col in q.column_iter() {
        for (acc, v) in out.iter_mut().zip(col.iter()) {
            *acc += v * v;
        }
    }
    out
}
