//! Counter-based random streams.
//!
//! Every random decision derives from one 64-bit seed. Independent tasks
//! (replicates, random programs, walks) each get their own ChaCha stream
//! selected by task index, so results do not depend on execution order.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type StreamRng = ChaCha8Rng;

/// The generator for task `index` under `seed`.
pub fn stream(seed: u64, index: u64) -> StreamRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// Stream index for task `index` inside task family `family`.
pub fn family_stream(family: u32, index: u32) -> u64 {
    (u64::from(family) << 32) | u64::from(index)
}
