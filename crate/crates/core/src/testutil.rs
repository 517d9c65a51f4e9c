use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::linalg::DenseMatrix;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn gaussian(m: usize, n: usize, seed: u64) -> DenseMatrix {
    let mut r = rng(seed ^ 0x9e37_79b9_7f4a_7c15);
    DenseMatrix::from_fn(m, n, |_, _| StandardNormal.sample(&mut r))
}
