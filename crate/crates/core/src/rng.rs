//! Splittable, schedule-independent random streams.
//!
//! Every consumer of randomness receives an [`RngStream`] rather than a live
//! generator. A stream is a pair `(master_seed, substream_index)` that maps to
//! a ChaCha8 generator keyed by the master seed and positioned on its own
//! 64-bit stream, so two workers never share state and the samples a trial
//! sees do not depend on which thread ran it or in what order.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RngStream {
    pub master_seed: u64,
    pub substream_index: u64,
}

impl RngStream {
    pub fn new(master_seed: u64, substream_index: u64) -> Self {
        Self {
            master_seed,
            substream_index,
        }
    }

    /// A fresh generator positioned at the start of this stream.
    pub fn rng(&self) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.master_seed);
        rng.set_stream(self.substream_index);
        rng
    }

    /// Derive an independent child stream labelled by `label`.
    ///
    /// The child's master seed is a hash of this stream's coordinates, and the
    /// label becomes its substream index, so `fork(a) != fork(b)` for `a != b`
    /// and forking is itself deterministic.
    pub fn fork(&self, label: u64) -> RngStream {
        let mixed = splitmix64(self.master_seed ^ splitmix64(self.substream_index ^ 0xA076_1D64_78BD_642F));
        RngStream::new(mixed, label)
    }
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}
