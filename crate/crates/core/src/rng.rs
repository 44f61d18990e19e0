//! Seeded, splittable random streams.
//!
//! Every random draw in the crate comes from a [`RngStream`], a `(seed,
//! stream_id)` pair backed by ChaCha8. ChaCha exposes 2⁶⁴ independent streams
//! per seed, so parallel workers get disjoint `stream_id`s and results never
//! depend on scheduling.
//!
//! Stream ids are partitioned by purpose so experiments sharing a seed do not
//! reuse draws:
//!
//! | range                 | use                                   |
//! |-----------------------|---------------------------------------|
//! | `[0, 2^62)`           | communication periods (index = period)|
//! | `[2^62, 2^63)`        | two-tier association realizations     |
//! | `[2^63, 2^64)`        | reward-distribution sampling batches  |

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub const PERIOD_STREAMS: u64 = 0;
pub const TWO_TIER_STREAMS: u64 = 1 << 62;
pub const DISTRIBUTION_STREAMS: u64 = 1 << 63;

/// The generator handed to samplers.
pub type StreamRng = ChaCha8Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct RngStream {
    pub seed: u64,
    pub stream_id: u64,
}

impl RngStream {
    pub fn new(seed: u64, stream_id: u64) -> Self {
        Self { seed, stream_id }
    }

    /// Stream for the `index`-th communication period.
    pub fn period(seed: u64, index: u64) -> Self {
        Self::new(seed, PERIOD_STREAMS + index)
    }

    pub fn two_tier(seed: u64, realization: u64) -> Self {
        Self::new(seed, TWO_TIER_STREAMS + realization)
    }

    pub fn distribution_batch(seed: u64, batch: u64) -> Self {
        Self::new(seed, DISTRIBUTION_STREAMS + batch)
    }

    /// A fresh generator positioned at the start of this stream.
    pub fn rng(&self) -> StreamRng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(self.stream_id);
        rng
    }
}
