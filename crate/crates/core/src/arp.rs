//! The decomposition driver: rangefinder, volume-sampled row pivots, and the
//! interpolation matrix `W` with `A ≈ W A(S,:)`.
//!
//! Random streams are derived from the configured seed. The pivot stream is
//! keyed by `(seed, k)` only, so the three variants select identical rows for
//! the same seed and differ only in how `W` is built.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{shape_mismatch, Error, Result};
use crate::linalg::{orth, DenseMatrix, HouseholderQr, RowPseudoinverse, RANK_TOL};
use crate::operand::MatrixOperand;
use crate::samplers::{greedy_pivots, rejection_rpqr, rpqr_sequential, PivotSet, RejectionConfig};
use crate::sketch::{round_up_to_multiple, SparseStack, DEFAULT_ZETA};

/// How `W` is formed from the selected rows.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Variant {
    /// `W = Q Q(S,:)⁻¹` from the rangefinder basis.
    Type1,
    /// `W = A A(S,:)†`, the projection onto the span of the selected rows.
    Type2,
    /// `W = (AΦ)(A(S,:)Φ)†` for an oversampled SparseStack `Φ`.
    Osid,
}

/// Which sampler draws the volume-sampled pivots.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum PivotSampler {
    #[default]
    Rejection,
    Sequential,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ArpConfig {
    pub k: usize,
    pub zeta: usize,
    /// Oversampling factor `c` for the OSID sketch width `c·k`.
    pub oversample: f64,
    pub variant: Variant,
    pub seed: u64,
    pub max_rounds: usize,
    pub sampler: PivotSampler,
}

impl ArpConfig {
    pub fn new(k: usize, variant: Variant, seed: u64) -> Self {
        Self {
            k,
            zeta: DEFAULT_ZETA,
            oversample: 2.0,
            variant,
            seed,
            max_rounds: RejectionConfig::default().max_rounds,
            sampler: PivotSampler::Rejection,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.k == 0 {
            return Err(Error::InvalidParam("k must be positive".into()));
        }
        if self.zeta == 0 {
            return Err(Error::InvalidSparsity { k: self.k, zeta: self.zeta });
        }
        if !(self.oversample >= 1.0) || !self.oversample.is_finite() {
            return Err(Error::InvalidParam(format!("oversampling factor {} must be at least 1", self.oversample)));
        }
        Ok(())
    }

    /// Width of the OSID sketch: `round(c·k)` rounded up to a multiple of ζ.
    pub fn osid_width(&self, k: usize) -> usize {
        let raw = ((self.oversample * k as f64).round() as usize).max(k);
        round_up_to_multiple(raw, self.zeta.min(raw))
    }
}

/// `A ≈ W A(S,:)`.
#[derive(Clone, Debug)]
pub struct InterpolativeDecomposition {
    pub pivots: PivotSet,
    /// `m × |S|`.
    pub weights: DenseMatrix,
    pub variant: Variant,
    /// Rank actually used; below `config.k` when the rangefinder found fewer
    /// independent directions.
    pub effective_rank: usize,
    pub config: ArpConfig,
    /// Set when `W` had to be computed through a truncated SVD.
    pub pinv_fallback: bool,
}

impl InterpolativeDecomposition {
    /// `‖W(S,:) − I‖_F`.
    pub fn interpolation_defect(&self) -> f64 {
        let ws = self.weights.select_rows(self.pivots.indices());
        let k = ws.nrows();
        (ws - DenseMatrix::identity(k, k)).norm()
    }
}

fn stream(seed: u64, tag: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(tag);
    rng
}

const OSID_STREAM: u64 = 1 << 40;

/// `(orth(AΩ), AΩ)` for a fresh SparseStack `Ω` whose width is `k` rounded up
/// to a multiple of ζ. The basis is truncated back to at most `k` columns and
/// may be narrower when `AΩ` is numerically rank deficient.
pub fn rangefinder<A, R>(a: &A, k: usize, zeta: usize, rng: &mut R) -> Result<(DenseMatrix, DenseMatrix)>
where
    A: MatrixOperand + ?Sized,
    R: rand::Rng + ?Sized,
{
    let (m, n) = a.shape();
    if m == 0 || n == 0 {
        return Err(Error::EmptyMatrix);
    }
    if k == 0 || k > m.min(n) {
        return Err(Error::InvalidParam(format!("rank {k} invalid for a {m}x{n} matrix")));
    }
    let width = round_up_to_multiple(k, zeta);
    let omega = SparseStack::new(n, width, zeta, rng)?;
    let sketch = a.sketch(&omega)?;
    let usable = sketch.columns(0, width.min(m)).into_owned();
    let q = orth(&usable)?;
    let kept = q.ncols().min(k);
    Ok((q.columns(0, kept).into_owned(), sketch))
}

/// Volume-sampled rows of `q` together with the QR of `Qᵀ(:,S)`.
fn sample_pivots(q: &DenseMatrix, cfg: &ArpConfig, rng: &mut ChaCha8Rng) -> Result<(PivotSet, HouseholderQr)> {
    match cfg.sampler {
        PivotSampler::Rejection => {
            let rc = RejectionConfig { max_rounds: cfg.max_rounds, ..RejectionConfig::default() };
            rejection_rpqr(q, rng, &rc)
        }
        PivotSampler::Sequential => {
            let qt = q.transpose();
            let pivots = rpqr_sequential(&qt, q.ncols(), rng)?;
            let mut qr = HouseholderQr::empty(q.ncols())?;
            qr.update(&qt.select_columns(pivots.indices()))?;
            Ok((pivots, qr))
        }
    }
}

/// `Q Q(S,:)⁻¹` using the QR `Qᵀ(:,S) = U R`, so that `Wᵀ = R⁻¹ Uᵀ Qᵀ`.
pub fn type1_weights(q: &DenseMatrix, qr: &HouseholderQr) -> Result<DenseMatrix> {
    let rotated = qr.apply_qt(&q.transpose())?;
    Ok(qr.solve_r(&rotated)?.transpose())
}

/// `A A(S,:)†`, with a truncated-SVD fallback. The flag reports the fallback.
pub fn type2_weights<A: MatrixOperand + ?Sized>(a: &A, pivots: &PivotSet) -> Result<(DenseMatrix, bool)> {
    let rows = a.select_rows(pivots.indices());
    match RowPseudoinverse::new(&rows) {
        Ok(pinv) => Ok((pinv.finish(&a.mul_dense(pinv.basis())?)?, false)),
        Err(Error::RankDeficient { .. }) => Ok((a.mul_dense(&svd_pinv(&rows)?)?, true)),
        Err(e) => Err(e),
    }
}

/// `Y Y(S,:)†` for a sketch `Y = AΦ`, with a truncated-SVD fallback.
pub fn osid_weights(y: &DenseMatrix, pivots: &PivotSet) -> Result<(DenseMatrix, bool)> {
    let rows = y.select_rows(pivots.indices());
    match RowPseudoinverse::new(&rows) {
        Ok(pinv) => Ok((pinv.finish(&(y * pinv.basis()))?, false)),
        Err(Error::RankDeficient { .. }) => Ok((y * svd_pinv(&rows)?, true)),
        Err(e) => Err(e),
    }
}

fn svd_pinv(b: &DenseMatrix) -> Result<DenseMatrix> {
    let svd = b.clone().svd(true, true);
    let smax = svd.singular_values.max();
    if !(smax > 0.0) {
        return Err(Error::RankDeficient { context: "selected rows are zero".into() });
    }
    svd.pseudo_inverse(RANK_TOL * smax)
        .map_err(|e| Error::RankDeficient { context: e.to_string() })
}

fn finish<A: MatrixOperand + ?Sized>(
    a: &A,
    cfg: &ArpConfig,
    variant: Variant,
    q: Option<(&DenseMatrix, &HouseholderQr)>,
    pivots: PivotSet,
) -> Result<InterpolativeDecomposition> {
    let rank = pivots.len();
    let (weights, pinv_fallback) = match variant {
        Variant::Type1 => {
            let (q, qr) = q.ok_or_else(|| Error::InvalidParam("type-1 weights need the rangefinder basis".into()))?;
            (type1_weights(q, qr)?, false)
        }
        Variant::Type2 => type2_weights(a, &pivots)?,
        Variant::Osid => {
            let mut rng = stream(cfg.seed, OSID_STREAM | rank as u64);
            let width = cfg.osid_width(rank);
            let phi = SparseStack::new(a.ncols(), width, cfg.zeta.min(width), &mut rng)?;
            osid_weights(&a.sketch(&phi)?, &pivots)?
        }
    };
    Ok(InterpolativeDecomposition {
        pivots,
        weights,
        variant,
        effective_rank: rank,
        config: *cfg,
        pinv_fallback,
    })
}

/// Runs the full pipeline on `a`. The result depends only on `(a, cfg)`.
pub fn arp_decompose<A: MatrixOperand + ?Sized>(a: &A, cfg: &ArpConfig) -> Result<InterpolativeDecomposition> {
    cfg.validate()?;
    let mut rng = stream(cfg.seed, cfg.k as u64);
    let (q, _) = rangefinder(a, cfg.k, cfg.zeta, &mut rng)?;
    if q.ncols() == 0 {
        return Err(Error::RankDeficient { context: "the sketch of A is numerically zero".into() });
    }
    let (pivots, qr) = sample_pivots(&q, cfg, &mut rng)?;
    finish(a, cfg, cfg.variant, Some((&q, &qr)), pivots)
}

/// Sketchy pivoted QR baseline: greedy column-pivoted QR on `(AΩ)ᵀ` picks the
/// rows, then OSID weights.
pub fn skqr_decompose<A: MatrixOperand + ?Sized>(a: &A, cfg: &ArpConfig) -> Result<InterpolativeDecomposition> {
    cfg.validate()?;
    let mut rng = stream(cfg.seed, cfg.k as u64);
    let (q, sketch) = rangefinder(a, cfg.k, cfg.zeta, &mut rng)?;
    let rank = q.ncols();
    if rank == 0 {
        return Err(Error::RankDeficient { context: "the sketch of A is numerically zero".into() });
    }
    let pivots = greedy_pivots(&sketch.transpose(), rank)?;
    finish(a, cfg, Variant::Osid, None, pivots)
}

/// Largest `m·n` for which [`rpqr_decompose`] densifies its input.
pub const RPQR_DENSE_LIMIT: u128 = 1 << 28;

/// Sequential randomly pivoted QR on the rows of `A` itself, then type-2
/// weights.
pub fn rpqr_decompose<A: MatrixOperand + ?Sized>(a: &A, cfg: &ArpConfig) -> Result<InterpolativeDecomposition> {
    cfg.validate()?;
    let (m, n) = a.shape();
    let count = m as u128 * n as u128;
    if count > RPQR_DENSE_LIMIT {
        return Err(Error::TooLarge { count, limit: RPQR_DENSE_LIMIT });
    }
    if cfg.k > m.min(n) {
        return Err(Error::InvalidParam(format!("rank {} invalid for a {m}x{n} matrix", cfg.k)));
    }
    let mut rng = stream(cfg.seed, cfg.k as u64);
    let at = a.columns_dense(0, n).transpose();
    let pivots = rpqr_sequential(&at, cfg.k, &mut rng)?;
    finish(a, cfg, Variant::Type2, None, pivots)
}

/// Columns per block in [`residual_fro`].
const RESIDUAL_BLOCK: usize = 256;

/// `‖A − W A(S,:)‖_F`, accumulated over column blocks of `A`.
pub fn residual_fro<A: MatrixOperand + ?Sized>(a: &A, id: &InterpolativeDecomposition) -> Result<f64> {
    let (m, n) = a.shape();
    let w = &id.weights;
    if w.nrows() != m || w.ncols() != id.pivots.len() {
        return Err(shape_mismatch((m, id.pivots.len()), w.shape()));
    }
    if id.pivots.ambient() != m {
        return Err(Error::DimensionMismatch {
            expected: format!("pivots into {m} rows"),
            found: format!("pivots into {} rows", id.pivots.ambient()),
        });
    }
    let mut total = 0.0;
    let mut start = 0;
    while start < n {
        let len = RESIDUAL_BLOCK.min(n - start);
        let block = a.columns_dense(start, len);
        let selected = block.select_rows(id.pivots.indices());
        total += (block - w * selected).norm_squared();
        start += len;
    }
    Ok(total.sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::{enumerate_volume_probs, expected_type1_error};
    use crate::sparse::SparseMatrix;
    use crate::testutil::{gaussian, rng};

    const ALL: [Variant; 3] = [Variant::Type1, Variant::Type2, Variant::Osid];

    fn low_rank(m: usize, n: usize, r: usize, seed: u64) -> DenseMatrix {
        gaussian(m, r, seed) * gaussian(r, n, seed + 1000)
    }

    fn decay(m: usize, n: usize, seed: u64) -> DenseMatrix {
        let mut a = gaussian(m, n, seed);
        for (i, mut row) in a.row_iter_mut().enumerate() {
            row *= 1.0 / ((i + 1) as f64).powi(2);
        }
        a
    }

    #[test]
    fn rangefinder_identity() {
        // With one nonzero per row the sketch has full rank only when the
        // hashed columns form a permutation.
        let a = DenseMatrix::identity(6, 6);
        let mut full = 0;
        for seed in 0..200 {
            let (q, _) = rangefinder(&a, 6, 1, &mut rng(seed)).unwrap();
            if q.ncols() == 6 {
                full += 1;
                assert!((&a - &q * q.tr_mul(&a)).norm() < 1e-12);
            }
        }
        assert!(full > 0);
    }

    #[test]
    fn rangefinder_exact_rank() {
        let mut d = DenseMatrix::zeros(20, 20);
        for i in 0..3 {
            d[(i, i)] = 1.0;
        }
        let u = orth(&gaussian(20, 20, 2)).unwrap();
        let a = &u * d * orth(&gaussian(20, 20, 3)).unwrap();
        for seed in 0..10 {
            let (q, _) = rangefinder(&a, 3, 1, &mut rng(seed)).unwrap();
            assert!((&a - &q * q.tr_mul(&a)).norm() <= 1e-10 * a.norm());
        }
    }

    #[test]
    fn rangefinder_near_optimal_on_decay() {
        let a = decay(300, 300, 4);
        let s = a.clone().svd(false, false).singular_values;
        let best25 = s.rows(25, s.len() - 25).norm();
        let good = (0..10)
            .filter(|&seed| {
                let (q, _) = rangefinder(&a, 50, DEFAULT_ZETA, &mut rng(seed)).unwrap();
                (&a - &q * q.tr_mul(&a)).norm() <= 10.0 * best25
            })
            .count();
        assert!(good >= 9, "{good} of 10");
    }

    #[test]
    fn rangefinder_reports_reduced_width() {
        let a = low_rank(30, 20, 2, 5);
        let (q, _) = rangefinder(&a, 8, 4, &mut rng(6)).unwrap();
        assert_eq!(q.ncols(), 2);
        assert!(matches!(rangefinder(&DenseMatrix::zeros(0, 3), 1, 1, &mut rng(0)), Err(Error::EmptyMatrix)));
    }

    #[test]
    fn canonical_rows_recovered_exactly() {
        let (m, n, k) = (10, 7, 3);
        let mut a = DenseMatrix::zeros(m, n);
        for i in 0..k {
            a[(i, i)] = 1.0;
        }
        for variant in ALL {
            let mut cfg = ArpConfig::new(k, variant, 3);
            cfg.zeta = 1;
            let id = arp_decompose(&a, &cfg).unwrap();
            assert_eq!(id.pivots.sorted(), vec![0, 1, 2]);
            assert!(id.interpolation_defect() < 1e-12);
            assert!(residual_fro(&a, &id).unwrap() < 1e-12);
        }
    }

    #[test]
    fn interpolation_property_all_variants() {
        for seed in 0..5 {
            let a = decay(60, 40, seed);
            for variant in ALL {
                let id = arp_decompose(&a, &ArpConfig::new(8, variant, seed)).unwrap();
                assert_eq!(id.effective_rank, 8);
                assert!(!id.pinv_fallback);
                assert!(id.interpolation_defect() <= 1e-10, "{variant:?}");
            }
        }
    }

    #[test]
    fn variants_share_pivots_and_type2_is_best() {
        for seed in 0..10 {
            let a = decay(80, 50, seed);
            let ids: Vec<_> = ALL.iter().map(|&v| arp_decompose(&a, &ArpConfig::new(6, v, seed)).unwrap()).collect();
            assert_eq!(ids[0].pivots, ids[1].pivots);
            assert_eq!(ids[0].pivots, ids[2].pivots);
            let r1 = residual_fro(&a, &ids[0]).unwrap();
            let r2 = residual_fro(&a, &ids[1]).unwrap();
            assert!(r2 <= r1 + 1e-12 * a.norm());
        }
    }

    #[test]
    fn exact_rank_is_reproduced() {
        let a = low_rank(40, 30, 4, 7);
        for variant in ALL {
            let id = arp_decompose(&a, &ArpConfig::new(4, variant, 8)).unwrap();
            assert!(residual_fro(&a, &id).unwrap() <= 1e-10 * a.norm());
        }
    }

    #[test]
    fn rank_deficiency_lowers_effective_rank() {
        let a = low_rank(40, 30, 3, 9);
        let id = arp_decompose(&a, &ArpConfig::new(8, Variant::Type2, 1)).unwrap();
        assert_eq!(id.effective_rank, 3);
        assert_eq!(id.weights.ncols(), 3);
        assert!(residual_fro(&a, &id).unwrap() <= 1e-10 * a.norm());
        assert!(matches!(
            arp_decompose(&DenseMatrix::zeros(5, 5), &ArpConfig::new(2, Variant::Type1, 0)),
            Err(Error::RankDeficient { .. })
        ));
    }

    #[test]
    fn svd_fallback_is_flagged() {
        let mut a = DenseMatrix::zeros(5, 4);
        a[(0, 0)] = 1.0;
        a[(1, 0)] = 2.0;
        let pivots = PivotSet::new(vec![0, 1], 5).unwrap();
        let (w, flagged) = type2_weights(&a, &pivots).unwrap();
        assert!(flagged);
        assert!((&w * a.select_rows(&[0, 1]) - &a).norm() < 1e-12);
    }

    #[test]
    fn residual_edge_cases() {
        let a = decay(20, 600, 11);
        let mut id = arp_decompose(&a, &ArpConfig::new(3, Variant::Type2, 2)).unwrap();
        let direct = (&a - &id.weights * a.select_rows(id.pivots.indices())).norm();
        assert!((residual_fro(&a, &id).unwrap() - direct).abs() <= 1e-12 * direct);
        id.weights.fill(0.0);
        assert!((residual_fro(&a, &id).unwrap() - a.norm()).abs() <= 1e-12 * a.norm());
        id.weights = DenseMatrix::zeros(19, 3);
        assert!(matches!(residual_fro(&a, &id), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn sparse_and_dense_inputs_agree() {
        let mut a = decay(50, 40, 12);
        a.iter_mut().enumerate().for_each(|(i, v)| {
            if i % 3 != 0 {
                *v = 0.0;
            }
        });
        let s = SparseMatrix::from_dense(&a);
        for variant in ALL {
            let cfg = ArpConfig::new(5, variant, 13);
            let d = arp_decompose(&a, &cfg).unwrap();
            let sp = arp_decompose(&s, &cfg).unwrap();
            assert_eq!(d.pivots, sp.pivots);
            assert!((&d.weights - &sp.weights).norm() <= 1e-12 * d.weights.norm());
            let (rd, rs) = (residual_fro(&a, &d).unwrap(), residual_fro(&s, &sp).unwrap());
            assert!((rd - rs).abs() <= 1e-10 * rd.max(1e-300));
        }
    }

    #[test]
    fn seeded_runs_are_bitwise_identical() {
        let a = decay(70, 30, 14);
        for variant in ALL {
            let cfg = ArpConfig::new(7, variant, 15);
            let x = arp_decompose(&a, &cfg).unwrap();
            let y = arp_decompose(&a, &cfg).unwrap();
            assert_eq!(x.pivots, y.pivots);
            assert_eq!(x.weights, y.weights);
        }
    }

    #[test]
    fn sequential_sampler_option() {
        let a = decay(50, 30, 16);
        let mut cfg = ArpConfig::new(5, Variant::Type1, 17);
        cfg.sampler = PivotSampler::Sequential;
        let id = arp_decompose(&a, &cfg).unwrap();
        assert!(id.interpolation_defect() <= 1e-10);
    }

    #[test]
    fn baselines_interpolate() {
        let a = decay(60, 40, 18);
        let cfg = ArpConfig::new(6, Variant::Type2, 19);
        for id in [skqr_decompose(&a, &cfg).unwrap(), rpqr_decompose(&a, &cfg).unwrap()] {
            assert_eq!(id.pivots.len(), 6);
            assert!(id.interpolation_defect() <= 1e-10);
        }
    }

    #[test]
    fn osid_width_rounding() {
        let cfg = ArpConfig::new(5, Variant::Osid, 0);
        assert_eq!(cfg.osid_width(5), 12);
        assert_eq!(cfg.osid_width(4), 8);
        assert_eq!(cfg.osid_width(1), 2);
        let bad = ArpConfig { oversample: 0.5, ..cfg };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn type1_expectation_by_enumeration() {
        let a = gaussian(8, 6, 20);
        let (q, _) = rangefinder(&a, 2, 1, &mut rng(21)).unwrap();
        let (lhs, rhs) = expected_type1_error(&a, &q).unwrap();
        assert!((lhs - rhs).abs() <= 1e-10 * rhs);
    }

    #[test]
    fn type1_coefficients_are_unbiased() {
        let a = gaussian(7, 5, 22);
        let q = orth(&gaussian(7, 3, 23)).unwrap();
        let dist = enumerate_volume_probs(&q, 3).unwrap();
        let mut mean = DenseMatrix::zeros(3, 5);
        for (t, p) in dist.iter() {
            mean += q.select_rows(t).lu().solve(&a.select_rows(t)).unwrap() * p;
        }
        assert!((mean - q.tr_mul(&a)).norm() <= 1e-10 * a.norm());
    }

    #[test]
    fn type1_weights_match_direct_inverse() {
        let a = decay(40, 20, 24);
        let id = arp_decompose(&a, &ArpConfig::new(4, Variant::Type1, 25)).unwrap();
        let mut rng = stream(25, 4);
        let (q, _) = rangefinder(&a, 4, DEFAULT_ZETA, &mut rng).unwrap();
        let direct = &q * q.select_rows(id.pivots.indices()).try_inverse().unwrap();
        assert!((direct - &id.weights).norm() <= 1e-10 * id.weights.norm());
    }

    proptest::proptest! {
        #![proptest_config(proptest::prelude::ProptestConfig::with_cases(24))]

        #[test]
        fn every_variant_interpolates(m in 10usize..40, n in 8usize..30, k in 1usize..6, seed in 0u64..10_000) {
            let a = decay(m, n, seed);
            for variant in ALL {
                let id = arp_decompose(&a, &ArpConfig::new(k, variant, seed)).unwrap();
                proptest::prop_assert!(id.interpolation_defect() <= 1e-10);
                let distinct: std::collections::BTreeSet<_> = id.pivots.indices().iter().collect();
                proptest::prop_assert_eq!(distinct.len(), id.pivots.len());
            }
        }
    }
}
