//! Seed derivation for independent, reproducible replication streams.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// The random generator used throughout the crate.
pub type SimRng = ChaCha8Rng;

/// Generator for replication `index` under `seed`. Distinct indices select
/// distinct ChaCha streams of the same key, so replications never overlap.
pub fn stream_rng(seed: u64, index: u64) -> SimRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// Mixes a purpose tag into a base seed (splitmix64 finaliser) so that
/// different experiment stages draw from unrelated keys.
pub fn derive_seed(seed: u64, tag: u64) -> u64 {
    let mut z = seed ^ tag.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}
