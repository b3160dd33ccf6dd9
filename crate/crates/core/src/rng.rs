//! Seed derivation.
//!
//! Every randomized unit of work (a tree, a boosting stage, a fold split, a
//! transcript's null model) owns an RNG seeded from a parent seed and a
//! stream identifier, so results never depend on the order in which units
//! run.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type Rng = ChaCha8Rng;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Child seed for `stream` under `seed`.
pub fn derive(seed: u64, stream: u64) -> u64 {
    splitmix64(seed ^ splitmix64(stream.wrapping_add(0x5851_F42D_4C95_7F2D)))
}

/// FNV-1a, used to turn identifiers into stream numbers.
pub fn hash_str(s: &str) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in s.bytes() {
        h ^= u64::from(b);
        h = h.wrapping_mul(0x0000_0100_0000_01B3);
    }
    h
}

pub fn rng_for(seed: u64, stream: u64) -> Rng {
    Rng::seed_from_u64(derive(seed, stream))
}
