//! Per-trial random streams.
//!
//! Every draw is keyed by `(master_seed, domain, index)`: the 256-bit ChaCha
//! key holds the master seed and a domain tag, and the 64-bit ChaCha stream
//! id holds the trial index. Streams are therefore independent of each other
//! and of how trials are scheduled across threads.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Purpose tags so that unrelated consumers of the same master seed never
/// share a stream.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
#[repr(u64)]
pub enum Domain {
    Ginibre = 1,
    Deformation = 2,
    Synthetic = 3,
    Verification = 4,
}

pub fn stream(master_seed: u64, domain: Domain, index: u64) -> ChaCha8Rng {
    let mut key = [0u8; 32];
    key[..8].copy_from_slice(&master_seed.to_le_bytes());
    key[8..16].copy_from_slice(&(domain as u64).to_le_bytes());
    let mut rng = ChaCha8Rng::from_seed(key);
    rng.set_stream(index);
    rng
}

/// Stream for Ginibre trial `trial_index`.
pub fn trial_stream(master_seed: u64, trial_index: u64) -> ChaCha8Rng {
    stream(master_seed, Domain::Ginibre, trial_index)
}
