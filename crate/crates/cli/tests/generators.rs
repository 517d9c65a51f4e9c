use arpivot_cli::generators::{gen_decay_dense, gen_decay_sparse, gen_kernel, grid_point};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

#[test]
fn dense_decay_row_norms_match_their_expectation() {
    let (m, n, seeds) = (100, 200, 50);
    let mut sums = vec![0.0; m];
    for seed in 0..seeds {
        let a = gen_decay_dense(m, n, &mut rng(seed));
        for (i, row) in a.row_iter().enumerate() {
            sums[i] += row.norm_squared() / seeds as f64;
        }
    }
    for decile in 0..10 {
        let rows = decile * 10..(decile + 1) * 10;
        let observed: f64 = rows.clone().map(|i| sums[i]).sum();
        let expected: f64 = rows.map(|i| n as f64 / ((i + 1) as f64).powi(4)).sum();
        assert!((observed / expected - 1.0).abs() <= 0.2, "decile {decile}: {observed} vs {expected}");
    }
}

#[test]
fn dense_decay_is_seeded() {
    assert_eq!(gen_decay_dense(30, 20, &mut rng(7)), gen_decay_dense(30, 20, &mut rng(7)));
    assert_ne!(gen_decay_dense(30, 20, &mut rng(7)), gen_decay_dense(30, 20, &mut rng(8)));
}

#[test]
fn sparse_decay_structure() {
    let a = gen_decay_sparse(50, 40, 7, &mut rng(1)).unwrap();
    assert_eq!(a.nnz(), 40 * 7);
    for j in 0..40 {
        assert_eq!(a.column(j).0.len(), 7);
    }
    let full = gen_decay_sparse(6, 5, 6, &mut rng(2)).unwrap();
    for j in 0..5 {
        assert_eq!(full.column(j).0, &[0, 1, 2, 3, 4, 5]);
    }
    let b = gen_decay_sparse(50, 40, 7, &mut rng(1)).unwrap();
    assert_eq!(a, b);
}

#[test]
fn sparse_support_is_uniform() {
    let (m, n, z) = (100, 10_000, 30);
    let a = gen_decay_sparse(m, n, z, &mut rng(3)).unwrap();
    let mut counts = vec![0usize; m];
    for j in 0..n {
        for &i in a.column(j).0 {
            counts[i] += 1;
        }
    }
    let expected = (n * z) as f64 / m as f64;
    for (i, &c) in counts.iter().enumerate() {
        assert!((c as f64 / expected - 1.0).abs() <= 0.15, "row {i}: {c} vs {expected}");
    }
}

#[test]
fn kernel_entries_are_bounded_by_pair_distances() {
    assert_eq!(gen_kernel(1).as_slice(), &[1.0]);
    for g in [2, 3, 5, 8] {
        let a = gen_kernel(g);
        let n = g * g;
        let mut min_dist = f64::INFINITY;
        let mut max_dist: f64 = 0.0;
        for i in 0..n {
            for j in 0..n {
                let (x1, x2) = grid_point(g, i, 0.0);
                let (y1, y2) = grid_point(g, j, 1.0);
                let d = (x1 - y1).hypot(x2 - y2);
                min_dist = min_dist.min(d);
                max_dist = max_dist.max(d);
                assert_eq!(a[(i, j)], 1.0 / d);
            }
        }
        let amax = a.max();
        let amin = a.min();
        assert_eq!(amax, 1.0 / min_dist);
        assert!((min_dist - 1.0 / g as f64).abs() < 1e-15);
        assert!(amin >= 1.0 / 5f64.sqrt() && amin.is_finite() && amin > 0.0);
        assert!(amax <= g as f64 + 1e-12);
    }
}
