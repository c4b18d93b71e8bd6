//! Seed splitting.
//!
//! Every consumer of randomness gets its own stream derived from the single
//! experiment seed as `seed.wrapping_add(fnv1a64(stream_name))`. Adding a new
//! consumer therefore never shifts the draws of an existing one.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// The RNG used throughout the crate.
pub type Rng = ChaCha8Rng;

/// 64-bit FNV-1a hash.
pub fn fnv1a64(bytes: &[u8]) -> u64 {
    let mut hash: u64 = 0xcbf2_9ce4_8422_2325;
    for &b in bytes {
        hash ^= u64::from(b);
        hash = hash.wrapping_mul(0x0000_0100_0000_01b3);
    }
    hash
}

pub fn sub_seed(seed: u64, stream: &str) -> u64 {
    seed.wrapping_add(fnv1a64(stream.as_bytes()))
}

/// Independent RNG stream `stream` of experiment seed `seed`.
pub fn stream(seed: u64, stream: &str) -> Rng {
    Rng::seed_from_u64(sub_seed(seed, stream))
}
