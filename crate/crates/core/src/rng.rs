//! Reproducible random streams.
//!
//! Every trajectory owns one ChaCha8 stream selected by `(seed, stream)`.
//! ChaCha is counter based, so streams never overlap and a stream can be
//! entered at any word offset without generating the prefix.

use rand::distr::Open01;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RngSpec {
    pub seed: u64,
    pub stream: u64,
}

impl RngSpec {
    pub fn new(seed: u64, stream: u64) -> Self {
        Self { seed, stream }
    }

    /// Same seed, different stream.
    pub fn with_stream(self, stream: u64) -> Self {
        Self { stream, ..self }
    }

    pub fn rng(&self) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(self.stream);
        rng
    }

    /// Generator positioned `offset` 64-bit draws into the stream.
    pub fn rng_at(&self, offset: u64) -> ChaCha8Rng {
        let mut rng = self.rng();
        rng.set_word_pos(u128::from(offset) * 2);
        rng
    }
}

/// `Exp(rate)` by inverse CDF: `-ln(U) / rate` with `U` uniform on (0, 1).
/// Consumes exactly one 64-bit word.
#[inline]
pub fn exponential<R: Rng + ?Sized>(rng: &mut R, rate: f64) -> f64 {
    let u: f64 = rng.sample(Open01);
    -u.ln() / rate
}
