//! Seed derivation.
//!
//! Episode seeds come from a SplitMix64 construction:
//! `split(base, i) = mix(base ^ mix(i + GOLDEN))`, where `mix` is the
//! SplitMix64 finalizer. Every derived seed then initializes an independent
//! ChaCha8 stream, so episodes never share generator state.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

fn mix(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derives the `index`-th child seed of `base`.
pub fn split(base: u64, index: u64) -> u64 {
    mix(base ^ mix(index.wrapping_add(GOLDEN)))
}

pub fn stream(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}
