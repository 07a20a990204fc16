//! Reproducible random streams.
//!
//! Every independent work unit gets its own ChaCha stream keyed by a
//! counter-based mix of `(master_seed, a, b)`, so results never depend on
//! scheduling order or worker count.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type Stream = ChaCha8Rng;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derives the stream for work unit `(a, b)` under `master_seed`.
pub fn stream(master_seed: u64, a: u64, b: u64) -> Stream {
    let key = splitmix64(splitmix64(splitmix64(master_seed) ^ a) ^ b.rotate_left(32));
    ChaCha8Rng::seed_from_u64(key)
}

pub fn seeded(seed: u64) -> Stream {
    ChaCha8Rng::seed_from_u64(seed)
}
