//! Seed derivation. Every random stream in the pipeline is keyed by a fixed
//! mixing of (master seed, indices), never by scheduling order.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type Rng = ChaCha8Rng;

/// Stream tags so that sibling streams derived from one seed never collide.
pub mod stream {
    pub const ENVIRONMENT: u64 = 0x656e_7669;
    pub const ENDPOINTS: u64 = 0x656e_6470;
    pub const BENCHMARK: u64 = 0x6265_6e63;
    pub const TRIAL: u64 = 0x7472_6961;
    pub const INIT: u64 = 0x696e_6974;
    pub const SHUFFLE: u64 = 0x7368_7566;
    pub const SPLIT: u64 = 0x7370_6c74;
}

/// SplitMix64 finalizer.
pub fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Folds `parts` into `seed`, order-sensitively.
pub fn derive(seed: u64, parts: &[u64]) -> u64 {
    parts.iter().fold(mix64(seed), |acc, &p| mix64(acc ^ mix64(p)))
}

pub fn rng(seed: u64) -> Rng {
    ChaCha8Rng::seed_from_u64(seed)
}
