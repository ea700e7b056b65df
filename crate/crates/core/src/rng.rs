//! Per-simulation random streams.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Generator for simulation `index` under master `seed`. Streams for
/// distinct indices never overlap, so results do not depend on scheduling.
pub fn path_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}
