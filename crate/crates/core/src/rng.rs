//! Counter-based random streams.
//!
//! Every replication owns a ChaCha8 stream addressed by `(seed, lane, index)`.
//! Nothing depends on which worker runs a replication, so estimates are
//! identical for any worker count.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub use rand_chacha::ChaCha8Rng as StreamRng;

/// Independent families of streams under one seed. Estimators that need
/// both hypotheses draw them from different lanes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Lane {
    Pre = 0,
    Post = 1,
    Aux = 2,
}

/// Factory for per-replication streams.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StreamFactory {
    seed: u64,
}

impl StreamFactory {
    pub fn new(seed: u64) -> Self {
        Self { seed }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// The stream for replication `index` in `lane`.
    pub fn stream(&self, lane: Lane, index: u64) -> ChaCha8Rng {
        assert!(index < 1 << 56, "replication index {index} out of range");
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(((lane as u64) << 56) | index);
        rng
    }
}
