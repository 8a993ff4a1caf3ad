//! Reproducible, splittable seeding.
//!
//! Replicate `r` of an experiment draws from a generator seeded with
//! `subseed(master, r)`, so results do not depend on the order in which
//! replicates run.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// SplitMix64 finalizer; a full-period mixing of a 64-bit state.
fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Counter-based sub-seed: one independent stream per (master seed, counter).
pub fn subseed(master: u64, counter: u64) -> u64 {
    splitmix64(master ^ splitmix64(counter.wrapping_mul(0xa076_1d64_78bd_642f)))
}

/// The generator for replicate `r` under `master`.
pub fn replicate_rng(master: u64, r: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(subseed(master, r))
}

/// A generator seeded directly (single-stream use).
pub fn seeded_rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}
