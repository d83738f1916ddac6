//! Seed derivation for reproducible runs.
//!
//! Every random stream in a run hangs off one root seed. Sub-seeds are
//! derived by label, and Monte-Carlo work is split into fixed-size blocks
//! that each get their own ChaCha stream, so results do not depend on how
//! many worker threads processed the blocks.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Symbols per independently seeded Monte-Carlo block.
pub const BLOCK: usize = 1 << 16;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Derives a labelled sub-seed from a root seed.
pub fn derive_seed(seed: u64, label: &str) -> u64 {
    label
        .bytes()
        .fold(splitmix64(seed), |acc, b| splitmix64(acc ^ u64::from(b)))
}

/// A generator for block `stream` of the run seeded by `seed`.
pub fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

pub fn seeded(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}
