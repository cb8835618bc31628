//! Deterministic seed derivation.
//!
//! Every source of randomness in the crate is a ChaCha stream seeded from a
//! single base seed via [`derive_seed`], so one `--seed` value pins an entire
//! run: model weights, calibration input, evaluation batch, sampler draws,
//! and search evolution all get their own decorrelated sub-streams.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Derive a decorrelated sub-seed from a base seed and a stream label.
///
/// SplitMix64 finalizer over `base + label * golden_gamma`; cheap, stateless,
/// and stable across platforms.
pub fn derive_seed(base: u64, stream: u64) -> u64 {
    let mut z = base.wrapping_add(stream.wrapping_mul(0x9E37_79B9_7F4A_7C15));
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// A reproducible generator for the given seed.
pub fn rng_from_seed(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}
