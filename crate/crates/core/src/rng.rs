//! Seed derivation.
//!
//! A single user-facing seed is expanded into independent sub-streams, one
//! per consumer, so that e.g. the demand stream can be held fixed while the
//! optimizer seed varies. The split is SplitMix64 applied to
//! `seed ^ (stream_tag * GOLDEN)`, which is stable across platforms and
//! crate versions.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

/// Named sub-streams derived from a run seed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum Stream {
    Topology = 1,
    Demands = 2,
    Bco = 3,
    Shadowing = 4,
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(GOLDEN);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derive the seed of `stream` from the run seed.
pub fn split_seed(seed: u64, stream: Stream) -> u64 {
    splitmix64(seed ^ (stream as u64).wrapping_mul(GOLDEN))
}

/// Derive a seed from a run seed and an arbitrary key (used for per-pair
/// shadowing draws).
pub fn keyed_seed(seed: u64, key: u64) -> u64 {
    splitmix64(splitmix64(seed) ^ key)
}

pub fn stream_rng(seed: u64, stream: Stream) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(split_seed(seed, stream))
}

/// FNV-1a over a sequence of u64 words; used to fingerprint demand streams.
#[derive(Debug, Clone, Copy)]
pub struct StreamHash(u64);

impl Default for StreamHash {
    fn default() -> Self {
        StreamHash(0xcbf2_9ce4_8422_2325)
    }
}

impl StreamHash {
    pub fn push(&mut self, word: u64) {
        for byte in word.to_le_bytes() {
            self.0 ^= byte as u64;
            self.0 = self.0.wrapping_mul(0x0000_0100_0000_01B3);
        }
    }

    pub fn finish(&self) -> u64 {
        self.0
    }
}
