//! Seeded, platform-independent random streams.
//!
//! Every consumer derives its generator from a `(seed, stream)` pair, so a
//! sample's draws depend only on its index and never on how many other
//! samples were generated first.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type Rng = ChaCha8Rng;

/// Stream reserved for model weight initialisation.
pub const WEIGHT_STREAM: u64 = u64::MAX;

/// ChaCha8 keyed by `seed`, positioned on the independent stream `stream`.
pub fn stream_rng(seed: u64, stream: u64) -> Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}
