//! Seed derivation and the crate-wide PRNG.

use rand::SeedableRng;

pub type Rng = rand_chacha::ChaCha8Rng;

/// One round of splitmix64.
pub fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^ (x >> 31)
}

/// Seed for item `index` of a run seeded with `seed`. Independent of the
/// order in which items are generated.
pub fn derive_seed(seed: u64, index: u64) -> u64 {
    splitmix64(splitmix64(seed) ^ index.wrapping_mul(0xD6E8_FEB8_6659_FD93))
}

/// Sub-seed for a named stage of one item's pipeline.
pub fn stage_seed(seed: u64, stage: &str) -> u64 {
    let mut h = seed;
    for b in stage.bytes() {
        h = splitmix64(h ^ u64::from(b));
    }
    h
}

pub fn rng_from_seed(seed: u64) -> Rng {
    Rng::seed_from_u64(seed)
}
