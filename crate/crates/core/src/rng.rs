//! Counter-based random streams.
//!
//! Every path is generated from a ChaCha8 keystream whose key is built from
//! `(master_seed, replication_index)` and whose stream word is a per-purpose
//! identifier. Two replications never share state, so paths can be simulated
//! in any order or concurrently and still come out bit-identical.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

/// Identifies one reproducible path.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SeedSpec {
    pub master_seed: u64,
    pub replication_index: u64,
}

const KEY_TAG: &[u8; 16] = b"rml/path-stream\0";

impl SeedSpec {
    pub fn new(master_seed: u64, replication_index: u64) -> Self {
        Self {
            master_seed,
            replication_index,
        }
    }

    /// Independent generator for one component of the path (innovations of
    /// `U`, regressors, censoring indicators, ...).
    pub fn stream(&self, stream_id: u64) -> ChaCha8Rng {
        let mut key = [0u8; 32];
        key[..8].copy_from_slice(&self.master_seed.to_le_bytes());
        key[8..16].copy_from_slice(&self.replication_index.to_le_bytes());
        key[16..].copy_from_slice(KEY_TAG);
        let mut rng = ChaCha8Rng::from_seed(key);
        rng.set_stream(stream_id);
        rng
    }
}

/// Stream identifiers used by the simulators.
pub mod streams {
    pub const U: u64 = 1;
    pub const V: u64 = 2;
    pub const REGRESSOR: u64 = 3;
    pub const NOISE: u64 = 4;
    pub const CENSORING: u64 = 5;
    pub const LATENT: u64 = 6;
}
