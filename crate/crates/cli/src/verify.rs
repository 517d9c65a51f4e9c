//! The verification suite behind `arpivot verify`: every distributional and
//! expectation identity checked against exhaustive enumeration, plus the
//! structural properties of the pipeline.

use std::collections::BTreeMap;
use std::fmt;

use arpivot::linalg::orth;
use arpivot::oracle::{
    check_active_regression, check_optimality, enumerate_kdpp_probs, enumerate_volume_probs, expected_type1_error,
    SubsetDistribution,
};
use arpivot::samplers::{leverage_multinomial, AcceptanceRule};
use arpivot::{
    arp_decompose, rejection_rpqr, residual_fro, rpqr_sequential, ArpConfig, DenseMatrix, RejectionConfig,
    SparseStack, Variant,
};
use nalgebra::DVector;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use statrs::distribution::{ChiSquared, ContinuousCDF};

use crate::generators::{gaussian, gen_decay_dense};

/// Slack added to the acceptance test by the corruption hook.
pub const CORRUPT_SLACK: f64 = 0.05;

/// Significance level of the chi-square goodness-of-fit checks.
pub const CHI_SQUARE_ALPHA: f64 = 1e-3;

#[derive(Clone, Copy, Debug)]
pub struct VerifyOptions {
    pub seed: u64,
    /// Replace the exact acceptance test by a biased one. The distribution
    /// checks must then fail.
    pub corrupt_acceptance: bool,
    /// Samples per sampler in the total-variation checks.
    pub samples: usize,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        Self { seed: 0, corrupt_acceptance: false, samples: 200_000 }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct CheckResult {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

#[derive(Clone, Debug, PartialEq)]
pub struct VerifyReport {
    pub checks: Vec<CheckResult>,
}

impl VerifyReport {
    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }
}

impl fmt::Display for VerifyReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let width = self.checks.iter().map(|c| c.name.len()).max().unwrap_or(0);
        for c in &self.checks {
            let tag = if c.passed { "PASS" } else { "FAIL" };
            writeln!(f, "{tag}  {:width$}  {}", c.name, c.detail)?;
        }
        let passed = self.checks.iter().filter(|c| c.passed).count();
        write!(f, "{passed}/{} checks passed", self.checks.len())
    }
}

type Outcome = Result<String, String>;

struct Suite {
    opts: VerifyOptions,
    rule: AcceptanceRule,
}

impl Suite {
    fn rng(&self, stream: u64) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.opts.seed);
        rng.set_stream(stream);
        rng
    }

    fn rejection(&self, q: &DenseMatrix, samples: usize, stream: u64) -> Result<Vec<Vec<usize>>, String> {
        let cfg = RejectionConfig { acceptance: self.rule, ..RejectionConfig::default() };
        let mut rng = self.rng(stream);
        (0..samples)
            .map(|_| rejection_rpqr(q, &mut rng, &cfg).map(|(s, _)| s.sorted()))
            .collect::<arpivot::Result<Vec<_>>>()
            .map_err(|e| format!("sampler error: {e}"))
    }

    fn sequential(&self, q: &DenseMatrix, samples: usize, stream: u64) -> Result<Vec<Vec<usize>>, String> {
        let qt = q.transpose();
        let mut rng = self.rng(stream);
        (0..samples)
            .map(|_| rpqr_sequential(&qt, q.ncols(), &mut rng).map(|s| s.sorted()))
            .collect::<arpivot::Result<Vec<_>>>()
            .map_err(|e| format!("sampler error: {e}"))
    }

    fn basis(&self, m: usize, k: usize, stream: u64) -> DenseMatrix {
        orth(&gaussian(m, k, &mut self.rng(stream))).expect("Gaussian matrices have full rank")
    }
}

fn tv_check(exact: &SubsetDistribution, emp: Result<SubsetDistribution, String>, bound: f64) -> Outcome {
    let tv = exact.total_variation(&emp?);
    let detail = format!("TV {tv:.4} (bound {bound})");
    if tv < bound {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn chi_square_check(exact: &SubsetDistribution, samples: Vec<Vec<usize>>) -> Outcome {
    let mut counts: BTreeMap<Vec<usize>, u64> = BTreeMap::new();
    for s in samples {
        *counts.entry(s).or_default() += 1;
    }
    let (stat, dof) = exact.chi_square(&counts);
    let critical = ChiSquared::new(dof as f64).map_err(|e| e.to_string())?.inverse_cdf(1.0 - CHI_SQUARE_ALPHA);
    let detail = format!("chi2 {stat:.1} on {dof} dof (critical {critical:.1})");
    if stat <= critical {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn all_within(name: &str, errs: impl IntoIterator<Item = f64>, tol: f64) -> Outcome {
    let worst = errs.into_iter().fold(0.0, f64::max);
    let detail = format!("worst {name} {worst:.2e} (tol {tol:.0e})");
    if worst <= tol {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn ensure(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn rel(a: f64, b: f64) -> f64 {
    if b == 0.0 {
        a.abs()
    } else {
        (a - b).abs() / b.abs()
    }
}

impl Suite {
    fn type1_identity(&self) -> Outcome {
        let mut rng = self.rng(1);
        let mut errs = Vec::new();
        for t in 0..20 {
            let (m, k, n) = (6 + t % 3, 1 + t % 3, if t % 2 == 0 { 3 } else { 5 });
            let q = orth(&gaussian(m, k, &mut rng)).map_err(|e| e.to_string())?;
            let (lhs, rhs) = expected_type1_error(&gaussian(m, n, &mut rng), &q).map_err(|e| e.to_string())?;
            errs.push(rel(lhs, rhs));
        }
        all_within("relative gap", errs, 1e-10)
    }

    fn regression(&self) -> Result<(Vec<f64>, Vec<f64>), String> {
        let mut rng = self.rng(2);
        let (mut beta, mut err) = (Vec::new(), Vec::new());
        for t in 0..20 {
            let (m, k) = (4 + t % 4, 1 + t % 3);
            let x = gaussian(m, k, &mut rng);
            let y = DVector::from_column_slice(gaussian(m, 1, &mut rng).as_slice());
            let c = check_active_regression(&x, &y).map_err(|e| e.to_string())?;
            beta.push(c.beta_error() / c.true_beta.norm());
            err.push(rel(c.lhs_err, c.rhs_err));
        }
        Ok((beta, err))
    }

    fn volume_kdpp(&self) -> Outcome {
        let mut rng = self.rng(3);
        let mut errs = Vec::new();
        for t in 0..10 {
            let (m, k) = (4 + t % 4, 1 + t % 3);
            let b = gaussian(m, k + t % 2, &mut rng);
            let vs = enumerate_volume_probs(&b, k).map_err(|e| e.to_string())?;
            let dpp = enumerate_kdpp_probs(&(&b * b.transpose()), k).map_err(|e| e.to_string())?;
            errs.push(vs.max_abs_difference(&dpp));
        }
        all_within("entry gap", errs, 1e-12)
    }

    fn right_invariance(&self) -> Outcome {
        let mut rng = self.rng(4);
        let mut errs = Vec::new();
        for t in 0..10 {
            let (m, k) = (4 + t % 4, 1 + t % 3);
            let x = gaussian(m, k, &mut rng);
            let a = enumerate_volume_probs(&x, k).map_err(|e| e.to_string())?;
            let b = enumerate_volume_probs(&orth(&x).map_err(|e| e.to_string())?, k).map_err(|e| e.to_string())?;
            errs.push(a.max_abs_difference(&b));
        }
        all_within("entry gap", errs, 1e-10)
    }

    fn leverage(&self) -> Outcome {
        let mut rng = self.rng(5);
        let n = 100_000;
        let draws = leverage_multinomial(&[2.0, 1.0, 1.0], n, &mut rng).map_err(|e| e.to_string())?;
        let freq: Vec<f64> = (0..3).map(|j| draws.iter().filter(|&&d| d == j).count() as f64 / n as f64).collect();
        let gap = freq.iter().zip([0.5, 0.25, 0.25]).map(|(f, p)| (f - p).abs()).fold(0.0, f64::max);
        ensure(gap <= 0.01, format!("frequencies {:.3}/{:.3}/{:.3}", freq[0], freq[1], freq[2]))
    }

    fn sampler_chi_square(&self, rejection: bool) -> Outcome {
        let q = self.basis(7, 3, 6);
        let exact = enumerate_volume_probs(&q, 3).map_err(|e| e.to_string())?;
        let samples = self.opts.samples / 2;
        let draws = if rejection { self.rejection(&q, samples, 10)? } else { self.sequential(&q, samples, 11)? };
        chi_square_check(&exact, draws)
    }

    fn interpolation(&self) -> Outcome {
        let mut rng = self.rng(7);
        let mut worst: f64 = 0.0;
        for t in 0..10u64 {
            let a = gen_decay_dense(40 + t as usize, 30, &mut rng);
            for variant in [Variant::Type1, Variant::Type2, Variant::Osid] {
                let id = arp_decompose(&a, &ArpConfig::new(6, variant, self.opts.seed + t)).map_err(|e| e.to_string())?;
                worst = worst.max(id.interpolation_defect());
            }
        }
        all_within("||W(S,:) - I||", [worst], 1e-10)
    }

    fn ordering(&self) -> Outcome {
        let mut rng = self.rng(8);
        let mut violations = 0;
        for t in 0..20u64 {
            let a = gen_decay_dense(60, 40, &mut rng);
            let run = |v| arp_decompose(&a, &ArpConfig::new(8, v, self.opts.seed + t)).and_then(|id| residual_fro(&a, &id));
            let (r1, r2) = (run(Variant::Type1).map_err(|e| e.to_string())?, run(Variant::Type2).map_err(|e| e.to_string())?);
            if r2 > r1 + 1e-12 * a.norm() {
                violations += 1;
            }
        }
        ensure(violations == 0, format!("{violations} of 20 trials with a larger projection residual"))
    }

    fn sparse_stack(&self) -> Outcome {
        let mut rng = self.rng(9);
        let mut count = 0;
        for &(n, k, zeta) in &[(50, 8, 1), (50, 8, 2), (50, 8, 4), (50, 8, 8), (30, 12, 3), (17, 20, 5)] {
            let emb = SparseStack::new(n, k, zeta, &mut rng).map_err(|e| e.to_string())?;
            let dense = emb.materialize().to_dense();
            for i in 0..n {
                let row = dense.row(i);
                let nz: Vec<usize> = (0..k).filter(|&j| row[j] != 0.0).collect();
                let blocks: Vec<usize> = nz.iter().map(|&j| j / (k / zeta)).collect();
                let unit = row.iter().all(|&v| v == 0.0 || (v.abs() - 1.0 / (zeta as f64).sqrt()).abs() < 1e-15);
                if nz.len() != zeta || blocks != (0..zeta).collect::<Vec<_>>() || !unit || (row.norm() - 1.0).abs() > 1e-14 {
                    return Err(format!("row {i} of a ({n}, {k}, {zeta}) embedding is malformed"));
                }
            }
            let a = gaussian(6, n, &mut rng);
            let implicit = emb.apply_right_dense(&a).map_err(|e| e.to_string())?;
            let naive = DenseMatrix::from_fn(a.nrows(), k, |i, c| {
                (0..n).fold(0.0, |acc, j| acc + a[(i, j)] * dense[(j, c)])
            });
            if implicit != naive {
                return Err(format!("implicit product differs for ({n}, {k}, {zeta})"));
            }
            count += 1;
        }
        Ok(format!("{count} embeddings well formed"))
    }

    fn qr_consistency(&self) -> Outcome {
        let q = self.basis(30, 5, 12);
        let cfg = RejectionConfig { acceptance: self.rule, ..RejectionConfig::default() };
        let (s, qr) = rejection_rpqr(&q, &mut self.rng(13), &cfg).map_err(|e| e.to_string())?;
        let selected = q.transpose().select_columns(s.indices());
        let err = (qr.reconstruct() - &selected).norm() / selected.norm();
        all_within("reconstruction error", [err], 1e-12)
    }

    fn zero_rows(&self) -> Outcome {
        let mut q = DenseMatrix::zeros(8, 2);
        q.view_mut((0, 0), (4, 2)).copy_from(&self.basis(4, 2, 14));
        let cfg = RejectionConfig { acceptance: self.rule, ..RejectionConfig::default() };
        let mut rng = self.rng(15);
        for _ in 0..2000 {
            let (s, _) = rejection_rpqr(&q, &mut rng, &cfg).map_err(|e| e.to_string())?;
            if s.indices().iter().any(|&i| i >= 4) {
                return Err("a zero row was selected".into());
            }
        }
        Ok("2000 draws avoid the zero rows".into())
    }
}

pub fn run_verify(opts: &VerifyOptions) -> VerifyReport {
    let rule = if opts.corrupt_acceptance {
        AcceptanceRule::Perturbed { slack: CORRUPT_SLACK }
    } else {
        AcceptanceRule::Exact
    };
    let suite = Suite { opts: *opts, rule };
    let q62 = suite.basis(6, 2, 16);
    let exact62 = enumerate_volume_probs(&q62, 2).expect("6 x 2 enumeration");
    let empirical = |draws: Result<Vec<Vec<usize>>, String>| draws.map(|d| SubsetDistribution::from_samples(6, 2, d));
    let rej62 = empirical(suite.rejection(&q62, opts.samples, 17));
    let seq62 = empirical(suite.sequential(&q62, opts.samples, 18));
    let regression = suite.regression();

    let mut checks: Vec<(&'static str, Outcome)> = vec![
        ("expected type-1 error identity", suite.type1_identity()),
        (
            "regression coefficients unbiased",
            regression.clone().and_then(|(b, _)| all_within("relative error", b, 1e-10)),
        ),
        ("regression error identity", regression.and_then(|(_, e)| all_within("relative gap", e, 1e-10))),
        (
            "optimality instance, k = 1..8",
            ensure((1..=8).all(check_optimality), "per-subset residual (k+1)^2, optimum k+1".into()),
        ),
        ("volume sampling equals k-DPP", suite.volume_kdpp()),
        ("volume sampling right invariance", suite.right_invariance()),
        ("leverage draws", suite.leverage()),
        ("rejection sampler vs enumeration", tv_check(&exact62, rej62.clone(), 0.01)),
        ("sequential sampler vs enumeration", tv_check(&exact62, seq62.clone(), 0.01)),
    ];
    let cross = match (rej62, seq62) {
        (Ok(a), Ok(b)) => tv_check(&a, Ok(b), 0.015),
        (Err(e), _) | (_, Err(e)) => Err(e),
    };
    checks.extend([
        ("rejection vs sequential sampler", cross),
        ("rejection sampler chi-square", suite.sampler_chi_square(true)),
        ("sequential sampler chi-square", suite.sampler_chi_square(false)),
        ("interpolation property", suite.interpolation()),
        ("projection beats type-1 residual", suite.ordering()),
        ("SparseStack structure", suite.sparse_stack()),
        ("QR of selected columns", suite.qr_consistency()),
        ("zero rows never selected", suite.zero_rows()),
    ]);

    VerifyReport {
        checks: checks
            .into_iter()
            .map(|(name, outcome)| match outcome {
                Ok(detail) => CheckResult { name, passed: true, detail },
                Err(detail) => CheckResult { name, passed: false, detail },
            })
            .collect(),
    }
}
