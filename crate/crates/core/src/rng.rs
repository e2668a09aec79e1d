//! Seeded randomness for decoding.
//!
//! [`RandomSource`] wraps ChaCha8 (from `rand_chacha`) seeded through
//! `SeedableRng::seed_from_u64`. Each uniform draw consumes one `u64` from the
//! stream and keeps its top 53 bits, giving a value in `[0, 1)`. The ChaCha
//! stream is defined independently of platform and word size, so a seed yields
//! the same draws everywhere.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone)]
pub struct RandomSource {
    seed: u64,
    rng: ChaCha8Rng,
}

impl RandomSource {
    pub fn new(seed: u64) -> Self {
        Self {
            seed,
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    /// The seed this source was created with.
    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Uniform draw in `[0, 1)`.
    pub fn next_f64(&mut self) -> f64 {
        self.rng.random::<f64>()
    }
}
