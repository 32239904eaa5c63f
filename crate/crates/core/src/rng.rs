//! Reproducible random streams.
//!
//! A [`RngSeed`] names a ChaCha8 key (`seed`) and stream (`stream_id`).
//! Monte Carlo work is cut into fixed-size chunks; chunk `c` reads the same
//! stream starting at word `c · 2^40`, so chunks never overlap and the draws
//! a chunk sees do not depend on which thread runs it.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

/// Words reserved for one chunk of replications.
const CHUNK_WORD_SHIFT: u32 = 40;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RngSeed {
    pub seed: u64,
    #[serde(default)]
    pub stream_id: u64,
}

impl RngSeed {
    pub fn new(seed: u64, stream_id: u64) -> Self {
        RngSeed { seed, stream_id }
    }

    /// Generator positioned at the start of this stream.
    pub fn rng(&self) -> ChaCha8Rng {
        self.substream(0)
    }

    /// Generator for chunk `chunk` of this stream.
    pub fn substream(&self, chunk: u64) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(self.stream_id);
        rng.set_word_pos((chunk as u128) << CHUNK_WORD_SHIFT);
        rng
    }

    /// A distinct stream under the same key, keyed by `tag`.
    pub fn derive(&self, tag: u64) -> RngSeed {
        RngSeed {
            seed: self.seed,
            stream_id: splitmix64(
                self.stream_id ^ splitmix64(tag.wrapping_add(0x5851_f42d_4c95_7f2d)),
            ),
        }
    }
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}
