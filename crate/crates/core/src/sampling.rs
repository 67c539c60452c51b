//! Seeded random sources for sampled checks and tests.

use crate::fiber::{mask_bidegree, FiberForm};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub type SampleRng = ChaCha8Rng;

pub fn rng(seed: u64) -> SampleRng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_complex<R: Rng + ?Sized>(rng: &mut R) -> Complex64 {
    Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
}

/// Uniformly random complex coefficients on every degree-`k` multi-index.
pub fn random_form<R: Rng + ?Sized>(rng: &mut R, dim: usize, k: usize) -> FiberForm {
    let mut f = FiberForm::zero(dim);
    for m in crate::fiber::lex_masks(dim, k) {
        f.set(m, random_complex(rng));
    }
    f
}

pub fn random_bidegree_form<R: Rng + ?Sized>(
    rng: &mut R,
    dim: usize,
    p: usize,
    q: usize,
) -> FiberForm {
    let mut f = FiberForm::zero(dim);
    for m in crate::fiber::lex_masks(dim, p + q) {
        if mask_bidegree(m) == (p, q) {
            f.set(m, random_complex(rng));
        }
    }
    f
}

pub fn random_vector<R: Rng + ?Sized>(rng: &mut R, len: usize) -> Vec<f64> {
    (0..len).map(|_| rng.random_range(-1.0..1.0)).collect()
}

pub fn random_unit_vector<R: Rng + ?Sized>(rng: &mut R, len: usize) -> Vec<f64> {
    loop {
        let v = random_vector(rng, len);
        let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if n > 1e-3 {
            return v.into_iter().map(|x| x / n).collect();
        }
    }
}
