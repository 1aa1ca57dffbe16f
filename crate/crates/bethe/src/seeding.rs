//! Deterministic seed derivation for batch experiments.
//!
//! Every trial in a batch gets its own stream seed derived from the batch
//! base seed and the trial index, so parallel and sequential execution draw
//! identical values.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Name of the pinned generator, recorded in output metadata.
pub const RNG_ALGORITHM: &str = "ChaCha8";

/// SplitMix64 finalizer; a full-avalanche 64-bit mix.
fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Stable 64-bit mix of a base seed and a stream index.
pub fn derive_seed(base_seed: u64, index: u64) -> u64 {
    splitmix64(splitmix64(base_seed) ^ index.wrapping_mul(0xd605_0b7d_8b8f_4fd5))
}

/// Construct the crate's pinned RNG from a seed.
pub fn rng_from_seed(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}
