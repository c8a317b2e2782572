//! Seeded randomness. Every stochastic routine takes an explicit `u64` seed
//! and expands it through ChaCha8, so results do not depend on the platform.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::linalg::DenseMatrix;

pub type Rng = ChaCha8Rng;

pub fn seeded(seed: u64) -> Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Independent child seed for stream `stream` of `base` (SplitMix64 finalizer).
pub fn derive_seed(base: u64, stream: u64) -> u64 {
    let mut z = base
        .wrapping_add(0x9E37_79B9_7F4A_7C15)
        .wrapping_add(stream.wrapping_mul(0xBF58_476D_1CE4_E5B9));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Matrix with i.i.d. `N(0, sigma²)` entries.
pub fn normal_matrix(rows: usize, cols: usize, sigma: f64, rng: &mut Rng) -> DenseMatrix {
    let dist = Normal::new(0.0, sigma).expect("sigma must be finite and non-negative");
    DenseMatrix::from_fn(rows, cols, |_, _| dist.sample(rng))
}
