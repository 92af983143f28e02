//! Deterministic RNG stream derivation.
//!
//! Every stochastic stage (init, dropout, window sampling, trajectory
//! sampling, trials) gets its own ChaCha8 stream derived from the run seed,
//! a stage tag and an index. Results are therefore bit-identical no matter
//! how work is scheduled across threads.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    let mut z = x;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derives a child seed from `(seed, tag, index)`.
pub fn child_seed(seed: u64, tag: &str, index: u64) -> u64 {
    let mut h = splitmix64(seed);
    for &b in tag.as_bytes() {
        h = splitmix64(h ^ u64::from(b));
    }
    splitmix64(h ^ index)
}

/// Independent deterministic stream for one stage of a run.
pub fn stream(seed: u64, tag: &str, index: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(child_seed(seed, tag, index))
}

/// Stable 64-bit hash for window-spec dedup counters.
pub fn stable_hash(parts: impl IntoIterator<Item = u64>) -> u64 {
    let mut h = 0xCBF2_9CE4_8422_2325u64;
    for p in parts {
        h = splitmix64(h ^ p);
    }
    h
}
