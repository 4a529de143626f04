//! Seeded, counter-based random streams.
//!
//! Every consumer asks for a stream by `(experiment, stage, index)`; the key is
//! hashed into a ChaCha20 seed so streams are independent of call order and can
//! be handed to worker threads freely.

use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use sha2::{Digest, Sha256};

pub type Stream = ChaCha20Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct SeedSource {
    seed: u64,
}

impl SeedSource {
    pub fn new(seed: u64) -> Self {
        Self { seed }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn stream(&self, experiment: &str, stage: &str, index: u64) -> Stream {
        let mut h = Sha256::new();
        h.update(self.seed.to_le_bytes());
        for label in [experiment, stage] {
            h.update((label.len() as u64).to_le_bytes());
            h.update(label.as_bytes());
        }
        h.update(index.to_le_bytes());
        ChaCha20Rng::from_seed(h.finalize().into())
    }

    /// Stream keyed additionally by the exact bit patterns of `point`.
    pub fn keyed_stream(&self, experiment: &str, point: &[f64]) -> Stream {
        let mut h = Sha256::new();
        h.update(self.seed.to_le_bytes());
        h.update((experiment.len() as u64).to_le_bytes());
        h.update(experiment.as_bytes());
        for v in point {
            // -0.0 and 0.0 name the same point
            let v = if *v == 0.0 { 0.0f64 } else { *v };
            h.update(v.to_bits().to_le_bytes());
        }
        ChaCha20Rng::from_seed(h.finalize().into())
    }
}
