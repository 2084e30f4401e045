//! Seeded random streams.
//!
//! Every stochastic component draws from a [`ChaCha8Rng`] derived from a
//! master seed plus a fixed tag, so independent parts of a run (dataset
//! generation, label noise, pair sampling, subset draws) never share a
//! stream and reordering one does not perturb the others.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type Rng = ChaCha8Rng;

/// Stream tags. Values are part of the reproducibility contract.
pub mod tag {
    pub const INIT: u64 = 1;
    pub const PAIRS: u64 = 2;
    pub const CLASS_SPECS: u64 = 3;
    pub const TRAIN_SET: u64 = 4;
    pub const TEST_SET: u64 = 5;
    pub const LABEL_NOISE: u64 = 6;
    pub const SUBSETS: u64 = 7;
    pub const CV_SPLIT: u64 = 8;
    pub const REPEAT: u64 = 9;
}

pub fn rng_from_seed(seed: u64) -> Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Independent stream `tag` of `seed`.
pub fn substream(seed: u64, tag: u64) -> Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(tag);
    rng
}

/// Derives a child seed, e.g. one per dataset repeat or CV fold.
pub fn derive_seed(seed: u64, index: u64) -> u64 {
    // splitmix64 finalizer over the combined words
    let mut z = seed ^ index.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}
