//! Portable, seeded randomness.
//!
//! Every random draw in the crate comes from ChaCha8 (`rand_chacha`), keyed
//! with `ChaCha8Rng::seed_from_u64(seed)` and separated into independent
//! purposes with `set_stream`. Uniform reals are 53-bit (`(u64 >> 11)·2⁻⁵³`)
//! and a Bernoulli(p) draw is `uniform < p`. Per-trial seeds are the first
//! eight bytes (little endian) of SHA-256 over a tag and the trial
//! coordinates, so the same grid produces the same instances everywhere.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

/// Stream identifiers keep different consumers of one seed independent.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
#[repr(u64)]
pub enum Stream {
    PlantedBlock = 1,
    Diversionary = 2,
    BernoulliSupport = 3,
    RandomSign = 4,
    LowRank = 5,
    GolfingBatches = 6,
}

pub fn stream_rng(seed: u64, stream: Stream) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream as u64);
    rng
}

#[inline]
pub fn bernoulli(rng: &mut ChaCha8Rng, p: f64) -> bool {
    rng.random::<f64>() < p
}

/// Seed of trial `t` in grid cell `(i, j)` under `base_seed`.
pub fn trial_seed(base_seed: u64, i: usize, j: usize, t: usize) -> u64 {
    let mut hasher = Sha256::new();
    hasher.update(b"qcr-trial");
    hasher.update(base_seed.to_le_bytes());
    hasher.update((i as u64).to_le_bytes());
    hasher.update((j as u64).to_le_bytes());
    hasher.update((t as u64).to_le_bytes());
    let digest = hasher.finalize();
    let mut head = [0u8; 8];
    head.copy_from_slice(&digest[..8]);
    u64::from_le_bytes(head)
}
