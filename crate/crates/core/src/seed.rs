//! Deterministic seed derivation.
//!
//! Every stage of the pipeline draws its randomness from a seed derived from
//! a root seed plus a stage tag (and, for per-row or per-repetition streams,
//! an index). Derivation is pure integer mixing, so results are identical
//! across platforms and independent of thread scheduling: parallel workers
//! each derive their own stream instead of sharing one.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

const FNV_OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
const FNV_PRIME: u64 = 0x0000_0100_0000_01b3;

fn fnv1a(bytes: &[u8]) -> u64 {
    let mut h = FNV_OFFSET;
    for &b in bytes {
        h ^= u64::from(b);
        h = h.wrapping_mul(FNV_PRIME);
    }
    h
}

/// splitmix64 finalizer; a cheap bijective scrambler.
fn mix(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    x = (x ^ (x >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    x ^ (x >> 31)
}

/// Derive a stage seed from a base seed and a tag.
pub fn derive(base: u64, tag: &str) -> u64 {
    mix(base ^ fnv1a(tag.as_bytes()))
}

/// Derive an indexed stream seed (per row, per tree, per repetition, ...).
pub fn derive_indexed(base: u64, tag: &str, index: u64) -> u64 {
    mix(derive(base, tag) ^ mix(index))
}

/// The RNG used throughout the crate.
pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}
