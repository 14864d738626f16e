//! Seeded random streams.
//!
//! Every consumer of randomness draws from its own ChaCha stream, keyed by
//! `(global seed, party index, label)`. Adding a party or a new consumer
//! never shifts the draws of another one.

use rand::SeedableRng;
use rand_chacha::{ChaCha20Rng, ChaCha8Rng};
use sha2::{Digest, Sha256};

/// Party index used for streams that do not belong to a computing party
/// (the dealer, the input provider, the simulator of the plant).
pub const HARNESS: u64 = u64::MAX;

pub fn stream(global_seed: u64, party: u64, label: &str) -> ChaCha20Rng {
    let mut hasher = Sha256::new();
    hasher.update(global_seed.to_le_bytes());
    hasher.update(party.to_le_bytes());
    hasher.update((label.len() as u64).to_le_bytes());
    hasher.update(label.as_bytes());
    let digest: [u8; 32] = hasher.finalize().into();
    ChaCha20Rng::from_seed(digest)
}

/// Batch stream for Monte-Carlo work: one ChaCha stream per batch index, so
/// the result does not depend on how batches are scheduled.
pub fn batch_stream(seed: u64, batch: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(batch);
    rng
}
