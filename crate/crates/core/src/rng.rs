//! Deterministic random-number substreams.
//!
//! Replication `r` of a run seeded with `seed` always draws from the same
//! ChaCha8 stream, independent of how replications are scheduled across
//! worker threads.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type SimRng = ChaCha8Rng;

/// Generator for replication `rep` of a run seeded with `seed`.
pub fn substream(seed: u64, rep: u64) -> SimRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(rep);
    rng
}
