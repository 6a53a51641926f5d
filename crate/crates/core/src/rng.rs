//! Seeded random streams.
//!
//! Every randomized component draws from a ChaCha stream selected by
//! `(seed, stream)`, so independent workers never share generator state and
//! results do not depend on scheduling.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type Rng = ChaCha8Rng;

/// Stream reserved for the main training loop.
pub const TRAIN_STREAM: u64 = 0;
/// Stream reserved for risk evaluation inside the trainer.
pub const EVAL_STREAM: u64 = 1;
/// Test-set selection in evaluation protocols.
pub const SPLIT_STREAM: u64 = 2;
/// First stream handed to sampler workers; worker `w` uses `WORKER_STREAM_BASE + w`.
pub const WORKER_STREAM_BASE: u64 = 1 << 16;

const INIT_DOMAIN: u64 = 0x9e37_79b9_7f4a_7c15;

pub fn stream(seed: u64, stream: u64) -> Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Generator keyed by `(seed, key)` for order-independent per-item draws,
/// such as lazy embedding initialization keyed by vertex.
pub fn keyed(seed: u64, key: u64) -> Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ INIT_DOMAIN);
    rng.set_stream(key);
    rng
}

/// Derive a child seed, for nested experiments (replicate `i` of size `n`, ...).
pub fn derive(seed: u64, parts: &[u64]) -> u64 {
    // splitmix64 folding
    let mut z = seed;
    for &p in parts {
        z = z.wrapping_add(p.wrapping_mul(0xbf58_476d_1ce4_e5b9)).wrapping_add(0x9e37_79b9_7f4a_7c15);
        z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
        z ^= z >> 31;
    }
    z
}
