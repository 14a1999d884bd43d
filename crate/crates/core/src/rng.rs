//! Counter-keyed random streams.
//!
//! Every Monte Carlo sample owns its own stream, addressed by
//! `(seed, point key, sample index)`. Results therefore do not depend on how
//! samples are scheduled across worker threads.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Stable key for an evaluation point. Keyed by value rather than by grid
/// index so that the same point draws the same samples in every context.
pub fn point_key(x: f64) -> u64 {
    // +0.0 and -0.0 are the same point
    if x == 0.0 {
        0
    } else {
        x.to_bits()
    }
}

pub fn stream(seed: u64, key: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(splitmix64(seed ^ splitmix64(key)));
    rng.set_stream(index);
    rng
}
