//! Counter-based random streams: one independent ChaCha stream per trajectory.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Stream `index` of the generator seeded with `master_seed`.
///
/// Results depend only on `(master_seed, index)`, so trajectories can be
/// scheduled on any number of threads without changing the output.
pub fn stream_rng(master_seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    rng.set_stream(index);
    rng
}

/// Seed for sub-experiment `index`, drawn from a stream disjoint from the
/// low-numbered trajectory streams of `master_seed`.
pub fn derive_seed(master_seed: u64, index: u64) -> u64 {
    stream_rng(master_seed, u64::MAX - index).next_u64()
}
