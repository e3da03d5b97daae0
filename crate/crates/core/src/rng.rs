//! Keyed random streams.
//!
//! Every random draw in the crate comes from a ChaCha8 stream whose key is
//! derived from `(master seed, pairing, player)` and whose 64-bit stream
//! selector is the run index. Two streams with different ids never share
//! keystream, and a stream can be rebuilt anywhere from its id alone, so
//! work can be split over any number of threads without changing results.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

const DOMAIN_TAG: u64 = 0x736c_6f74_6761_6d65;

/// Pairing-id offsets keeping the simulators' stream families apart.
/// Tournament pairings use ids below `1 << 40`.
pub mod domain {
    pub const CAPTURE: u64 = 1 << 40;
    pub const VIRTUAL_DEVICES: u64 = 2 << 40;
    pub const MULTICHANNEL: u64 = 3 << 40;
}

/// Position of one stream inside a simulation campaign.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct StreamId {
    pub pairing: u64,
    pub run: u64,
    pub player: u64,
}

impl StreamId {
    pub const fn new(pairing: u64, run: u64, player: u64) -> Self {
        Self {
            pairing,
            run,
            player,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RngStream {
    pub seed: u64,
    pub id: StreamId,
}

impl RngStream {
    pub const fn new(seed: u64, id: StreamId) -> Self {
        Self { seed, id }
    }

    /// Builds a fresh generator positioned at the start of this stream.
    pub fn generator(&self) -> SlotRng {
        let mut key = [0u8; 32];
        key[0..8].copy_from_slice(&self.seed.to_le_bytes());
        key[8..16].copy_from_slice(&self.id.pairing.to_le_bytes());
        key[16..24].copy_from_slice(&self.id.player.to_le_bytes());
        key[24..32].copy_from_slice(&DOMAIN_TAG.to_le_bytes());
        let mut inner = ChaCha8Rng::from_seed(key);
        inner.set_stream(self.id.run);
        SlotRng { inner }
    }
}

/// Generator handed to strategies and capture users.
#[derive(Clone, Debug)]
pub struct SlotRng {
    inner: ChaCha8Rng,
}

impl SlotRng {
    /// Uniform draw on `[0, 1)`.
    pub fn uniform(&mut self) -> f64 {
        self.inner.random::<f64>()
    }

    /// `true` with probability `p`. Probabilities of exactly 0 or 1 consume
    /// no randomness.
    pub fn bernoulli(&mut self, p: f64) -> bool {
        if p <= 0.0 {
            false
        } else if p >= 1.0 {
            true
        } else {
            self.uniform() < p
        }
    }

    /// Samples an index from a probability vector that sums to one.
    pub fn categorical(&mut self, probs: &[f64]) -> usize {
        let u = self.uniform();
        let mut acc = 0.0;
        let mut last_positive = 0;
        for (i, &p) in probs.iter().enumerate() {
            if p > 0.0 {
                last_positive = i;
                acc += p;
                if u < acc {
                    return i;
                }
            }
        }
        // rounding slack in the cumulative sum
        last_positive
    }
}
