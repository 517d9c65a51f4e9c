//! Ground truth by exhaustive enumeration over size-`k` subsets.
//!
//! Everything here is brute force and meant for small problems: volume
//! sampling and k-DPP probabilities, the expected error of the type-1
//! interpolative approximation, the active-regression identities, and the
//! worst-case instance showing the factor `k + 1` is tight.

use std::collections::BTreeMap;

use itertools::Itertools;
use nalgebra::DVector;

use crate::error::{Error, Result};
use crate::linalg::DenseMatrix;

/// Upper limit on the number of subsets any enumeration will visit.
pub const ENUMERATION_LIMIT: u128 = 1_000_000;

/// Subsets whose volume falls below this multiple of the product of their row
/// norms get probability zero.
pub const VOLUME_FLOOR: f64 = 1e-14;

fn binomial(m: usize, k: usize) -> u128 {
    let k = k.min(m - k.min(m));
    (0..k as u128).fold(1u128, |acc, i| acc * (m as u128 - i) / (i + 1))
}

fn guard(m: usize, k: usize) -> Result<()> {
    if k > m {
        return Err(Error::InvalidParam(format!("subset size {k} exceeds {m}")));
    }
    let count = binomial(m, k);
    if count > ENUMERATION_LIMIT {
        return Err(Error::TooLarge { count, limit: ENUMERATION_LIMIT });
    }
    Ok(())
}

/// Probability distribution over size-`k` subsets of `{0, …, m−1}`, keyed by
/// sorted index tuples. Only subsets with positive mass are stored.
#[derive(Clone, Debug, PartialEq)]
pub struct SubsetDistribution {
    m: usize,
    k: usize,
    probs: BTreeMap<Vec<usize>, f64>,
}

impl SubsetDistribution {
    fn from_weights(m: usize, k: usize, weights: Vec<(Vec<usize>, f64)>) -> Result<Self> {
        let total: f64 = weights.iter().map(|(_, w)| w).sum();
        if !(total > 0.0) {
            return Err(Error::DegenerateDistribution);
        }
        let probs = weights
            .into_iter()
            .filter(|(_, w)| *w > 0.0)
            .map(|(t, w)| (t, w / total))
            .collect();
        Ok(Self { m, k, probs })
    }

    /// Empirical distribution of sorted samples.
    pub fn from_samples<I: IntoIterator<Item = Vec<usize>>>(m: usize, k: usize, samples: I) -> Self {
        let mut counts: BTreeMap<Vec<usize>, f64> = BTreeMap::new();
        let mut n = 0.0;
        for s in samples {
            *counts.entry(s).or_default() += 1.0;
            n += 1.0;
        }
        for v in counts.values_mut() {
            *v /= n;
        }
        Self { m, k, probs: counts }
    }

    pub fn ambient(&self) -> usize {
        self.m
    }

    pub fn subset_size(&self) -> usize {
        self.k
    }

    /// Probability of a sorted subset.
    pub fn prob(&self, subset: &[usize]) -> f64 {
        self.probs.get(subset).copied().unwrap_or(0.0)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&[usize], f64)> {
        self.probs.iter().map(|(t, &p)| (t.as_slice(), p))
    }

    /// Number of subsets with positive probability.
    pub fn support_size(&self) -> usize {
        self.probs.len()
    }

    pub fn total_variation(&self, other: &Self) -> f64 {
        let keys: std::collections::BTreeSet<&Vec<usize>> = self.probs.keys().chain(other.probs.keys()).collect();
        0.5 * keys
            .into_iter()
            .map(|t| (self.prob(t) - other.prob(t)).abs())
            .sum::<f64>()
    }

    /// Largest entrywise difference over the union of supports.
    pub fn max_abs_difference(&self, other: &Self) -> f64 {
        self.probs
            .keys()
            .chain(other.probs.keys())
            .map(|t| (self.prob(t) - other.prob(t)).abs())
            .fold(0.0, f64::max)
    }

    /// Pearson statistic of `counts` (drawn `n` times) against this
    /// distribution, and its degrees of freedom.
    pub fn chi_square(&self, counts: &BTreeMap<Vec<usize>, u64>) -> (f64, usize) {
        let n: u64 = counts.values().sum();
        let mut stat = 0.0;
        for (t, &p) in &self.probs {
            let expected = p * n as f64;
            let observed = counts.get(t).copied().unwrap_or(0) as f64;
            stat += (observed - expected).powi(2) / expected;
        }
        if counts.keys().any(|t| !self.probs.contains_key(t)) {
            stat = f64::INFINITY;
        }
        (stat, self.probs.len().saturating_sub(1))
    }
}

fn row_norm_product(b: &DenseMatrix, rows: &[usize]) -> f64 {
    rows.iter().map(|&r| b.row(r).norm()).product()
}

/// `VS_k(B)`: subset `T` has probability proportional to `det(B(T,:) B(T,:)ᵀ)`,
/// the squared `k`-volume spanned by the selected rows. Volumes are computed
/// as products of QR diagonals.
pub fn enumerate_volume_probs(b: &DenseMatrix, k: usize) -> Result<SubsetDistribution> {
    let (m, n) = b.shape();
    if k == 0 || k > m.min(n) {
        return Err(Error::InvalidParam(format!("subset size {k} invalid for a {m}x{n} matrix")));
    }
    guard(m, k)?;
    let weights = (0..m)
        .combinations(k)
        .map(|t| {
            let bt = b.select_rows(&t).transpose();
            let r = bt.qr().r();
            let vol: f64 = r.diagonal().iter().map(|d| d.abs()).product();
            let w = if vol < VOLUME_FLOOR * row_norm_product(b, &t) { 0.0 } else { vol * vol };
            (t, w)
        })
        .collect();
    SubsetDistribution::from_weights(m, k, weights)
}

/// `k-DPP(H)`: subset `T` has probability proportional to `det H(T,T)`.
pub fn enumerate_kdpp_probs(h: &DenseMatrix, k: usize) -> Result<SubsetDistribution> {
    let (m, n) = h.shape();
    if m != n {
        return Err(Error::DimensionMismatch {
            expected: "square kernel".into(),
            found: format!("{m}x{n}"),
        });
    }
    if k == 0 || k > m {
        return Err(Error::InvalidParam(format!("subset size {k} invalid for a {m}x{m} kernel")));
    }
    guard(m, k)?;
    let sym = (h + h.transpose()) * 0.5;
    let eig = sym.clone().symmetric_eigenvalues();
    let scale = eig.amax();
    let min = eig.min();
    if min < -1e-10 * scale {
        return Err(Error::NotPsd { min_eigenvalue: min });
    }
    let weights = (0..m)
        .combinations(k)
        .map(|t| {
            let minor = sym.select_rows(&t).select_columns(&t);
            let det = minor.clone().lu().determinant();
            let diag: f64 = t.iter().map(|&i| sym[(i, i)].max(0.0)).product();
            let w = if det < VOLUME_FLOOR * VOLUME_FLOOR * diag { 0.0 } else { det };
            (t, w)
        })
        .collect();
    SubsetDistribution::from_weights(m, k, weights)
}

/// Both sides of `E‖A − Q Q(T,:)⁻¹ A(T,:)‖²_F = (k+1)‖(I − QQᵀ)A‖²_F` with
/// `T ~ VS_k(Q)`; returns `(lhs, rhs)`.
pub fn expected_type1_error(a: &DenseMatrix, q: &DenseMatrix) -> Result<(f64, f64)> {
    let (m, k) = q.shape();
    if a.nrows() != m {
        return Err(Error::DimensionMismatch {
            expected: format!("{m} rows"),
            found: format!("{} rows", a.nrows()),
        });
    }
    let dist = enumerate_volume_probs(q, k)?;
    let mut lhs = 0.0;
    for (t, p) in dist.iter() {
        let coeffs = q
            .select_rows(t)
            .lu()
            .solve(&a.select_rows(t))
            .ok_or_else(|| Error::RankDeficient { context: format!("Q({t:?},:) is singular") })?;
        lhs += p * (a - q * coeffs).norm_squared();
    }
    let resid = a - q * q.tr_mul(a);
    Ok((lhs, (k as f64 + 1.0) * resid.norm_squared()))
}

/// Outcome of [`check_active_regression`].
#[derive(Clone, Debug)]
pub struct ActiveRegressionCheck {
    /// `Σ_T P(T) X(T,:)⁻¹ y(T)`.
    pub expected_beta: DVector<f64>,
    /// `X† y`.
    pub true_beta: DVector<f64>,
    /// `Σ_T P(T) ‖X X(T,:)⁻¹ y(T) − y‖²`.
    pub lhs_err: f64,
    /// `(k+1) ‖(I − XX†) y‖²`.
    pub rhs_err: f64,
}

impl ActiveRegressionCheck {
    pub fn beta_error(&self) -> f64 {
        (&self.expected_beta - &self.true_beta).norm()
    }
}

/// Active linear regression with `k` volume-sampled observations of `y`.
pub fn check_active_regression(x: &DenseMatrix, y: &DVector<f64>) -> Result<ActiveRegressionCheck> {
    let (m, k) = x.shape();
    if y.len() != m {
        return Err(Error::DimensionMismatch {
            expected: format!("response of length {m}"),
            found: format!("length {}", y.len()),
        });
    }
    let svd = x.clone().svd(true, true);
    let smax = svd.singular_values.max();
    if k > m || svd.singular_values.min() <= 1e-12 * smax {
        return Err(Error::RankDeficient { context: "design matrix lacks full column rank".into() });
    }
    let true_beta = svd
        .solve(y, 0.0)
        .map_err(|e| Error::RankDeficient { context: e.to_string() })?;
    let rhs_err = (k as f64 + 1.0) * (y - x * &true_beta).norm_squared();

    let dist = enumerate_volume_probs(x, k)?;
    let mut expected_beta = DVector::zeros(k);
    let mut lhs_err = 0.0;
    for (t, p) in dist.iter() {
        let yt = DVector::from_iterator(k, t.iter().map(|&i| y[i]));
        let beta = x
            .select_rows(t)
            .lu()
            .solve(&yt)
            .ok_or_else(|| Error::RankDeficient { context: format!("X({t:?},:) is singular") })?;
        lhs_err += p * (x * &beta - y).norm_squared();
        expected_beta += beta * p;
    }
    Ok(ActiveRegressionCheck { expected_beta, true_beta, lhs_err, rhs_err })
}

/// The instance on which every size-`k` subset loses exactly the factor
/// `k + 1`: `y` is all ones and the columns of `X` are the difference vectors
/// `e_i − e_{i+1}`, which span the orthogonal complement of `y`.
pub fn optimality_instance(k: usize) -> (DenseMatrix, DVector<f64>) {
    let mut x = DenseMatrix::zeros(k + 1, k);
    for i in 0..k {
        x[(i, i)] = 1.0;
        x[(i + 1, i)] = -1.0;
    }
    (x, DVector::from_element(k + 1, 1.0))
}

/// Per-subset and optimal squared residuals on [`optimality_instance`].
#[derive(Clone, Debug)]
pub struct OptimalityReport {
    pub k: usize,
    pub subset_residuals: Vec<f64>,
    pub optimal_residual: f64,
}

impl OptimalityReport {
    /// Every subset residual is `(k+1)²` and the optimum is `k+1`, to `tol`.
    pub fn holds(&self, tol: f64) -> bool {
        let kp1 = self.k as f64 + 1.0;
        (self.optimal_residual - kp1).abs() <= tol * kp1
            && self
                .subset_residuals
                .iter()
                .all(|r| (r - kp1 * kp1).abs() <= tol * kp1 * kp1 && (r / self.optimal_residual - kp1).abs() <= tol * kp1)
    }
}

pub fn optimality_report(k: usize) -> Result<OptimalityReport> {
    if k == 0 {
        return Err(Error::InvalidParam("k must be positive".into()));
    }
    let (x, y) = optimality_instance(k);
    let svd = x.clone().svd(true, true);
    let beta = svd
        .solve(&y, 0.0)
        .map_err(|e| Error::RankDeficient { context: e.to_string() })?;
    let optimal_residual = (&x * beta - &y).norm_squared();
    let subset_residuals = (0..=k)
        .combinations(k)
        .map(|t| {
            let yt = DVector::from_iterator(k, t.iter().map(|&i| y[i]));
            let beta = x
                .select_rows(&t)
                .lu()
                .solve(&yt)
                .ok_or_else(|| Error::RankDeficient { context: format!("X({t:?},:) is singular") })?;
            Ok((&x * beta - &y).norm_squared())
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(OptimalityReport { k, subset_residuals, optimal_residual })
}

/// True when [`optimality_report`] confirms the factor `k + 1` to `1e-10`.
pub fn check_optimality(k: usize) -> bool {
    optimality_report(k).is_ok_and(|r| r.holds(1e-10))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::orth;
    use crate::testutil::gaussian;

    #[test]
    fn volume_probs_small_cases() {
        let d = enumerate_volume_probs(&DenseMatrix::identity(2, 2), 1).unwrap();
        assert!((d.prob(&[0]) - 0.5).abs() < 1e-15 && (d.prob(&[1]) - 0.5).abs() < 1e-15);

        let d = enumerate_volume_probs(&DenseMatrix::from_diagonal(&DVector::from_vec(vec![2.0, 1.0])), 1).unwrap();
        assert!((d.prob(&[0]) - 0.8).abs() < 1e-15);
        assert!((d.prob(&[1]) - 0.2).abs() < 1e-15);

        let b = DenseMatrix::from_row_slice(3, 2, &[1.0, 0.0, 0.0, 1.0, 1.0, 1.0]);
        let d = enumerate_volume_probs(&b, 2).unwrap();
        for t in [[0, 1], [0, 2], [1, 2]] {
            assert!((d.prob(&t) - 1.0 / 3.0).abs() < 1e-15);
        }
    }

    #[test]
    fn kdpp_small_cases() {
        let d = enumerate_kdpp_probs(&DenseMatrix::identity(4, 4), 1).unwrap();
        assert!(d.iter().all(|(_, p)| (p - 0.25).abs() < 1e-15));
        let d = enumerate_kdpp_probs(&DenseMatrix::from_diagonal(&DVector::from_vec(vec![3.0, 1.0])), 1).unwrap();
        assert!((d.prob(&[0]) - 0.75).abs() < 1e-15);
        let not_psd = DenseMatrix::from_diagonal(&DVector::from_vec(vec![1.0, -1.0]));
        assert!(matches!(enumerate_kdpp_probs(&not_psd, 1), Err(Error::NotPsd { .. })));
    }

    #[test]
    fn volume_and_kdpp_agree() {
        for seed in 0..5 {
            let q = orth(&gaussian(6, 3, seed)).unwrap();
            let vs = enumerate_volume_probs(&q, 3).unwrap();
            let dpp = enumerate_kdpp_probs(&(&q * q.transpose()), 3).unwrap();
            assert!(vs.max_abs_difference(&dpp) <= 1e-12);
        }
    }

    #[test]
    fn volume_sampling_is_right_invariant() {
        let x = gaussian(7, 3, 9);
        let a = enumerate_volume_probs(&x, 3).unwrap();
        let b = enumerate_volume_probs(&orth(&x).unwrap(), 3).unwrap();
        assert!(a.max_abs_difference(&b) <= 1e-10);
    }

    #[test]
    fn zero_rows_get_no_mass() {
        let mut b = gaussian(5, 2, 3);
        b.set_row(2, &nalgebra::RowDVector::zeros(2));
        let d = enumerate_volume_probs(&b, 2).unwrap();
        assert!(d.iter().all(|(t, _)| !t.contains(&2)));
        assert_eq!(d.support_size(), 6);
    }

    #[test]
    fn enumeration_guard() {
        let b = DenseMatrix::zeros(60, 5);
        assert!(matches!(enumerate_volume_probs(&b, 5), Err(Error::TooLarge { .. })));
    }

    #[test]
    fn type1_identity_edge_cases() {
        let q = orth(&gaussian(6, 2, 4)).unwrap();
        let in_range = &q * gaussian(2, 3, 5);
        let (lhs, rhs) = expected_type1_error(&in_range, &q).unwrap();
        assert!(lhs < 1e-25 && rhs < 1e-25);

        let square = orth(&gaussian(3, 3, 6)).unwrap();
        let (lhs, rhs) = expected_type1_error(&gaussian(3, 4, 7), &square).unwrap();
        assert!(lhs < 1e-25 && rhs < 1e-25);
    }

    #[test]
    fn type1_identity_random() {
        let q = orth(&gaussian(7, 2, 8)).unwrap();
        let (lhs, rhs) = expected_type1_error(&gaussian(7, 4, 9), &q).unwrap();
        assert!(rhs > 0.0);
        assert!((lhs - rhs).abs() <= 1e-10 * rhs);
    }

    #[test]
    fn active_regression_edge_cases() {
        let x = gaussian(5, 2, 10);
        let beta = DVector::from_vec(vec![1.5, -2.0]);
        let y = &x * &beta;
        let c = check_active_regression(&x, &y).unwrap();
        assert!(c.lhs_err < 1e-25 && c.rhs_err < 1e-25);
        assert!((&c.expected_beta - &beta).norm() < 1e-12);

        let sq = gaussian(3, 3, 11);
        let c = check_active_regression(&sq, &DVector::from_vec(vec![1.0, 2.0, 3.0])).unwrap();
        assert!(c.lhs_err < 1e-20 && c.rhs_err < 1e-20);

        let mut deficient = gaussian(4, 2, 12);
        let col = deficient.column(0).into_owned();
        deficient.set_column(1, &col);
        assert!(matches!(
            check_active_regression(&deficient, &DVector::zeros(4)),
            Err(Error::RankDeficient { .. })
        ));
    }

    #[test]
    fn active_regression_random() {
        let x = gaussian(6, 2, 13);
        let y = DVector::from_column_slice(gaussian(6, 1, 14).as_slice());
        let c = check_active_regression(&x, &y).unwrap();
        assert!(c.beta_error() <= 1e-10 * c.true_beta.norm());
        assert!((c.lhs_err - c.rhs_err).abs() <= 1e-10 * c.rhs_err);
    }

    #[test]
    fn identities_hold_on_twenty_instances() {
        for seed in 0..20u64 {
            let m = 6 + (seed % 3) as usize;
            let k = 1 + (seed % 3) as usize;
            let n = if seed % 2 == 0 { 3 } else { 5 };
            let q = orth(&gaussian(m, k, 100 + seed)).unwrap();
            let (lhs, rhs) = expected_type1_error(&gaussian(m, n, 200 + seed), &q).unwrap();
            assert!((lhs - rhs).abs() <= 1e-10 * rhs, "seed {seed}");

            let x = gaussian(m.min(7), k, 300 + seed);
            let y = DVector::from_column_slice(gaussian(m.min(7), 1, 400 + seed).as_slice());
            let c = check_active_regression(&x, &y).unwrap();
            assert!(c.beta_error() <= 1e-10 * c.true_beta.norm(), "seed {seed}");
            assert!((c.lhs_err - c.rhs_err).abs() <= 1e-10 * c.rhs_err, "seed {seed}");
        }
    }

    #[test]
    fn optimality_instance_by_hand() {
        let (x, y) = optimality_instance(1);
        assert_eq!(x.as_slice(), &[1.0, -1.0]);
        assert_eq!(y.as_slice(), &[1.0, 1.0]);
        assert!((x.transpose() * &y).norm() == 0.0);
        let r = optimality_report(1).unwrap();
        assert!(r.subset_residuals.iter().all(|v| (v - 4.0).abs() < 1e-12));
        assert!((r.optimal_residual - 2.0).abs() < 1e-12);

        let r = optimality_report(2).unwrap();
        assert_eq!(r.subset_residuals.len(), 3);
        assert!(r.subset_residuals.iter().all(|v| (v - 9.0).abs() < 1e-12));

        let r = optimality_report(5).unwrap();
        assert!(r.subset_residuals.iter().all(|v| (v - 36.0).abs() < 1e-10));
        assert!((r.optimal_residual - 6.0).abs() < 1e-12);
    }

    #[test]
    fn optimality_holds_up_to_twelve() {
        for k in 1..=12 {
            assert!(check_optimality(k), "k = {k}");
        }
    }

    proptest::proptest! {
        #![proptest_config(proptest::prelude::ProptestConfig::with_cases(32))]

        #[test]
        fn volume_equals_kdpp(m in 3usize..=7, k in 1usize..=3, seed in 0u64..1_000_000) {
            let k = k.min(m);
            let b = gaussian(m, k + 1, seed);
            let vs = enumerate_volume_probs(&b, k).unwrap();
            let dpp = enumerate_kdpp_probs(&(&b * b.transpose()), k).unwrap();
            proptest::prop_assert!(vs.max_abs_difference(&dpp) <= 1e-12);
            let total: f64 = vs.iter().map(|(_, p)| p).sum();
            proptest::prop_assert!((total - 1.0).abs() <= 1e-12);
        }
    }
}
