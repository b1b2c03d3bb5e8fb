//! Seed derivation. Every random component draws from its own ChaCha stream
//! whose seed is mixed from the run seed and a component tag.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type Rng = ChaCha8Rng;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Child seed for stream `tag` of `seed`.
pub fn derive_seed(seed: u64, tag: u64) -> u64 {
    splitmix64(splitmix64(seed) ^ tag.wrapping_mul(0xD6E8_FEB8_6659_FD93))
}

/// Child seed for a path of tags, e.g. `[stage, state]`.
pub fn derive_path(seed: u64, path: &[u64]) -> u64 {
    path.iter().fold(seed, |s, &t| derive_seed(s, t))
}

pub fn stream(seed: u64, tag: u64) -> Rng {
    Rng::seed_from_u64(derive_seed(seed, tag))
}

pub fn rng_from(seed: u64) -> Rng {
    Rng::seed_from_u64(seed)
}
