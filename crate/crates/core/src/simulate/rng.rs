//! Per-path random streams.
//!
//! A ChaCha8 generator keyed by the run seed with the stream id set to the
//! path index. Streams never overlap, and regenerating path `i` alone gives
//! the same numbers as generating it inside a bundle.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Random stream for one path.
pub fn path_rng(seed: u64, path: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(path);
    rng
}

/// Independent seed for an auxiliary channel (exponential clocks, tail
/// closures) so that adding a channel never perturbs the path noise.
pub fn channel_seed(seed: u64, channel: u64) -> u64 {
    let mut z = seed ^ channel.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Stream for path `path` on auxiliary channel `channel`.
pub fn channel_rng(seed: u64, channel: u64, path: u64) -> ChaCha8Rng {
    path_rng(channel_seed(seed, channel), path)
}
