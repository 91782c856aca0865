//! Seeded random streams.
//!
//! Every random decision in a run draws from a ChaCha8 stream derived from
//! the run seed and a stream id, so results do not depend on scheduling.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type Rng = ChaCha8Rng;

pub fn seeded(seed: u64) -> Rng {
    Rng::seed_from_u64(seed)
}

/// Independent stream `id` of the generator keyed by `seed`.
pub fn stream(seed: u64, id: u64) -> Rng {
    let mut rng = Rng::seed_from_u64(seed);
    rng.set_stream(id);
    rng
}
