//! Pivot selection by randomly pivoted QR.
//!
//! Two samplers are provided. [`rpqr_sequential`] is the textbook procedure on
//! a general `d × m` matrix: sample a column with probability proportional to
//! its current squared norm, then orthogonalize every column against it.
//! [`rejection_rpqr`] specializes to `Qᵀ` for an orthonormal `Q` and draws the
//! same volume-sampling distribution by proposing blocks of pivots from the
//! leverage scores and thinning them with [`rejection_sample_submatrix`].

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::Rng;

use crate::error::{Error, Result};
use crate::linalg::{column_slice_mut, gemm_tn, householder, squared_row_norms, DenseMatrix, HouseholderQr};

/// Ordered set of distinct zero-based row indices, in selection order.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PivotSet {
    indices: Vec<usize>,
    m: usize,
}

impl PivotSet {
    pub fn new(indices: Vec<usize>, m: usize) -> Result<Self> {
        let mut seen = vec![false; m];
        for &i in &indices {
            if i >= m {
                return Err(Error::InvalidParam(format!("pivot {i} out of range for {m} rows")));
            }
            if std::mem::replace(&mut seen[i], true) {
                return Err(Error::InvalidParam(format!("pivot {i} selected twice")));
            }
        }
        Ok(Self { indices, m })
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    /// Number of rows the pivots were drawn from.
    pub fn ambient(&self) -> usize {
        self.m
    }

    pub fn sorted(&self) -> Vec<usize> {
        let mut s = self.indices.clone();
        s.sort_unstable();
        s
    }
}

/// Proposals for one block round together with the Gram matrix of their
/// residuals, `H = CᵀC` with `C = (I − Π)Qᵀ(:,T)`.
#[derive(Clone, Debug)]
pub struct ProposalBlock {
    pub proposals: Vec<usize>,
    pub gram: DenseMatrix,
    pub leverage: Vec<f64>,
}

/// Acceptance test used by [`rejection_sample_submatrix`].
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub enum AcceptanceRule {
    /// Accept proposal `i` when `ℓ(i)·u < H(i,i)`.
    #[default]
    Exact,
    /// Accept a nonzero residual when `ℓ(i)·u ≤ H(i,i) + slack`. Biased;
    /// exists so that the verification suite can confirm it detects a broken
    /// sampler.
    Perturbed { slack: f64 },
}

impl AcceptanceRule {
    fn accepts(self, leverage: f64, residual: f64, u: f64) -> bool {
        match self {
            AcceptanceRule::Exact => leverage * u < residual,
            AcceptanceRule::Perturbed { slack } => residual > 0.0 && leverage * u <= residual + slack,
        }
    }
}

/// Residual diagonals at or below this fraction of the leverage score are
/// roundoff from an exact linear dependence and are treated as zero.
const RESIDUAL_FLOOR: f64 = 1e-12;

/// Thins a block of proposals. Walks the block in order, accepting position
/// `i` with probability `H(i,i)/ℓ(i)` and, on acceptance, replacing the
/// trailing block of `H` by its Schur complement. Returns accepted positions.
pub fn rejection_sample_submatrix<R: Rng + ?Sized>(block: &ProposalBlock, rng: &mut R) -> Vec<usize> {
    thin_block(block.gram.clone(), &block.leverage, AcceptanceRule::Exact, rng)
}

fn thin_block<R: Rng + ?Sized>(
    mut h: DenseMatrix,
    leverage: &[f64],
    rule: AcceptanceRule,
    rng: &mut R,
) -> Vec<usize> {
    let b = leverage.len();
    debug_assert_eq!(h.shape(), (b, b));
    let mut accepted = Vec::new();
    let mut pivot_col = vec![0.0; b];
    for i in 0..b {
        let lev = leverage[i];
        let mut resid = h[(i, i)];
        debug_assert!(resid <= lev + 1e-12, "acceptance ratio {resid}/{lev} exceeds one");
        if resid <= RESIDUAL_FLOOR * lev {
            resid = 0.0;
        }
        let u: f64 = rng.random();
        if !rule.accepts(lev, resid.min(lev), u) {
            continue;
        }
        accepted.push(i);
        for r in i..b {
            pivot_col[r] = h[(r, i)];
        }
        for c in i..b {
            let f = pivot_col[c] / resid;
            if f == 0.0 {
                continue;
            }
            let col = &mut column_slice_mut(&mut h, c)[i..];
            for (x, &p) in col.iter_mut().zip(&pivot_col[i..]) {
                *x -= p * f;
            }
        }
    }
    accepted
}

/// Knobs for [`rejection_rpqr`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RejectionConfig {
    pub max_rounds: usize,
    /// Proposals per round; `None` means `k`.
    pub block_size: Option<usize>,
    pub acceptance: AcceptanceRule,
}

impl Default for RejectionConfig {
    fn default() -> Self {
        Self { max_rounds: 64, block_size: None, acceptance: AcceptanceRule::Exact }
    }
}

/// `count` iid indices with `P{j} = ℓ_j / Σℓ`.
pub fn leverage_multinomial<R: Rng + ?Sized>(scores: &[f64], count: usize, rng: &mut R) -> Result<Vec<usize>> {
    let dist = WeightedIndex::new(scores).map_err(|_| Error::DegenerateDistribution)?;
    Ok((0..count).map(|_| dist.sample(rng)).collect())
}

/// Samples `k` rows of the orthonormal `m × k` matrix `q` from the volume
/// sampling distribution `VS_k(Q)`. Also returns the Householder QR of
/// `Qᵀ(:,S)` with columns in selection order.
pub fn rejection_rpqr<R: Rng + ?Sized>(
    q: &DenseMatrix,
    rng: &mut R,
    cfg: &RejectionConfig,
) -> Result<(PivotSet, HouseholderQr)> {
    let (m, k) = q.shape();
    if k == 0 {
        return Err(Error::EmptyMatrix);
    }
    if k > m {
        return Err(Error::DimensionMismatch {
            expected: format!("at least {k} rows"),
            found: format!("{m} rows"),
        });
    }
    let qt = q.transpose();
    let defect = (&qt * q - DenseMatrix::identity(k, k)).norm();
    if defect > 1e-8 || !defect.is_finite() {
        return Err(Error::NotOrthonormal { defect });
    }

    let leverage = squared_row_norms(q);
    let dist = WeightedIndex::new(&leverage).map_err(|_| Error::DegenerateDistribution)?;
    let block = cfg.block_size.unwrap_or(k).max(1);

    let mut qr = HouseholderQr::empty(k)?;
    let mut selected = Vec::with_capacity(k);
    let mut rounds = 0;
    while selected.len() < k {
        if rounds == cfg.max_rounds {
            return Err(Error::MaxRoundsExceeded { rounds });
        }
        rounds += 1;

        let proposals: Vec<usize> = (0..block).map(|_| dist.sample(rng)).collect();
        // With Y = (H₁⋯H_r)ᵀ Qᵀ(:,T), the residual C = (I − UUᵀ)Qᵀ(:,T) has
        // CᵀC equal to the Gram matrix of the trailing k − r rows of Y.
        let rotated = qr.apply_qt(&qt.select_columns(&proposals))?;
        let tail = rotated.rows(qr.rank(), k - qr.rank()).into_owned();
        let gram = gemm_tn(&tail, &tail);
        let lev: Vec<f64> = proposals.iter().map(|&t| leverage[t]).collect();

        let mut accepted = thin_block(gram, &lev, cfg.acceptance, rng);
        accepted.truncate(k - selected.len());
        if accepted.is_empty() {
            continue;
        }
        qr.update_rotated(rotated.select_columns(&accepted))?;
        selected.extend(accepted.iter().map(|&p| proposals[p]));
    }
    Ok((PivotSet::new(selected, m)?, qr))
}

/// Column-pivoted Householder elimination on a working copy of `m`, with
/// squared column norms maintained by downdating.
fn pivoted_elimination<F>(m: &DenseMatrix, k: usize, mut choose: F) -> Result<Vec<usize>>
where
    F: FnMut(&[f64], f64) -> usize,
{
    let (d, n) = m.shape();
    if k > d.min(n) {
        return Err(Error::InvalidParam(format!("cannot select {k} pivots from a {d}x{n} matrix")));
    }
    let mut work = m.clone();
    let original: Vec<f64> = work.column_iter().map(|c| c.norm_squared()).collect();
    let mut norms = original.clone();
    let total0: f64 = original.iter().sum();
    let mut pivots = Vec::with_capacity(k);
    let mut v = vec![0.0; d];

    for i in 0..k {
        let total: f64 = norms.iter().sum();
        if !(total > 1e-12 * total0) {
            return Err(Error::RankDeficient {
                context: format!("residual exhausted after {i} of {k} pivots"),
            });
        }
        let j = choose(&norms, total);
        pivots.push(j);

        let len = d - i;
        let x = &mut v[..len];
        x.copy_from_slice(&work.column(j).as_slice()[i..]);
        let (tau, _) = householder(x);

        for c in 0..n {
            if norms[c] == 0.0 {
                continue;
            }
            let col = &mut column_slice_mut(&mut work, c)[i..];
            if tau != 0.0 {
                let s: f64 = x.iter().zip(col.iter()).map(|(a, b)| a * b).sum();
                let f = tau * s;
                for (y, vi) in col.iter_mut().zip(x.iter()) {
                    *y -= f * vi;
                }
            }
            let lead = col[0];
            let down = norms[c] - lead * lead;
            norms[c] = if down < 1e-8 * original[c] {
                col[1..].iter().map(|y| y * y).sum()
            } else {
                down
            };
        }
        norms[j] = 0.0;
    }
    Ok(pivots)
}

fn sample_proportional<R: Rng + ?Sized>(weights: &[f64], total: f64, rng: &mut R) -> usize {
    let target = rng.random::<f64>() * total;
    let mut acc = 0.0;
    let mut last = 0;
    for (j, &w) in weights.iter().enumerate() {
        if w <= 0.0 {
            continue;
        }
        acc += w;
        last = j;
        if target < acc {
            return j;
        }
    }
    last
}

fn argmax(weights: &[f64]) -> usize {
    let mut best = 0;
    for (j, &w) in weights.iter().enumerate() {
        if w > weights[best] {
            best = j;
        }
    }
    best
}

/// Randomly pivoted QR on the columns of the `d × m` matrix `m`: returns `k`
/// column indices. The caller's matrix is not modified.
pub fn rpqr_sequential<R: Rng + ?Sized>(m: &DenseMatrix, k: usize, rng: &mut R) -> Result<PivotSet> {
    let pivots = pivoted_elimination(m, k, |norms, total| sample_proportional(norms, total, rng))?;
    PivotSet::new(pivots, m.ncols())
}

/// Deterministic column-pivoted QR (largest residual norm first) on the
/// columns of `m`: returns `k` column indices.
pub fn greedy_pivots(m: &DenseMatrix, k: usize) -> Result<PivotSet> {
    let pivots = pivoted_elimination(m, k, |norms, _| argmax(norms))?;
    PivotSet::new(pivots, m.ncols())
}
