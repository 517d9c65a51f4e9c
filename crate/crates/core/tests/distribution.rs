use arpivot::linalg::orth;
use arpivot::oracle::{enumerate_volume_probs, SubsetDistribution};
use arpivot::{rejection_rpqr, rpqr_sequential, DenseMatrix, RejectionConfig};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

fn basis(m: usize, k: usize, seed: u64) -> DenseMatrix {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    orth(&DenseMatrix::from_fn(m, k, |_, _| StandardNormal.sample(&mut rng))).unwrap()
}

fn rejection_samples(q: &DenseMatrix, n: usize, seed: u64) -> SubsetDistribution {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let cfg = RejectionConfig::default();
    let draws = (0..n).map(|_| rejection_rpqr(q, &mut rng, &cfg).unwrap().0.sorted());
    SubsetDistribution::from_samples(q.nrows(), q.ncols(), draws)
}

fn sequential_samples(q: &DenseMatrix, n: usize, seed: u64) -> SubsetDistribution {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let qt = q.transpose();
    let draws = (0..n).map(|_| rpqr_sequential(&qt, q.ncols(), &mut rng).unwrap().sorted());
    SubsetDistribution::from_samples(q.nrows(), q.ncols(), draws)
}

#[test]
fn both_samplers_match_enumeration_on_6x2() {
    let q = basis(6, 2, 1);
    let exact = enumerate_volume_probs(&q, 2).unwrap();
    assert_eq!(exact.support_size(), 15);
    let rej = rejection_samples(&q, 200_000, 2);
    let seq = sequential_samples(&q, 200_000, 3);
    assert!(exact.total_variation(&rej) < 0.01);
    assert!(exact.total_variation(&seq) < 0.01);
    assert!(rej.total_variation(&seq) < 0.015);
}

#[test]
fn samplers_match_enumeration_for_small_shapes() {
    for (m, k) in [(4, 1), (5, 2), (7, 3), (6, 3)] {
        let q = basis(m, k, 10 + m as u64 * 7 + k as u64);
        let exact = enumerate_volume_probs(&q, k).unwrap();
        let tv = exact.total_variation(&rejection_samples(&q, 200_000, m as u64));
        assert!(tv < 0.01, "({m}, {k}): TV {tv}");
    }
}

#[test]
fn rejection_output_factors_selected_columns() {
    let q = basis(50, 10, 4);
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..20 {
        let (s, qr) = rejection_rpqr(&q, &mut rng, &RejectionConfig::default()).unwrap();
        let cols = q.transpose().select_columns(s.indices());
        assert!((qr.reconstruct() - &cols).norm() <= 1e-12 * cols.norm());
        let r = qr.r();
        for j in 0..r.ncols() {
            for i in j + 1..r.nrows() {
                assert_eq!(r[(i, j)], 0.0);
            }
        }
    }
}
