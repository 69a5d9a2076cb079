//! Seeded random streams.
//!
//! Every stochastic routine in the crate is generic over [`rand::Rng`], but
//! reproducible runs go through [`RngStream`]: ChaCha20 keyed by a 64-bit seed
//! with a 64-bit stream id selecting an independent keystream. The generator
//! and the seed expansion are fixed by [`RNG_ALGORITHM`]; changing either is a
//! breaking change to every seeded expectation downstream.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha20Rng;

/// Identifies the generator behind [`RngStream`].
pub const RNG_ALGORITHM: &str = "chacha20(rand_chacha 0.9, seed_from_u64, set_stream)/v1";

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash)]
pub struct RngSeed {
    pub seed: u64,
    pub stream: u64,
}

impl RngSeed {
    pub const fn new(seed: u64, stream: u64) -> Self {
        Self { seed, stream }
    }

    /// Same seed, different stream. Used to hand one stream to each worker.
    pub const fn with_stream(self, stream: u64) -> Self {
        Self { seed: self.seed, stream }
    }
}

#[derive(Clone, Debug)]
pub struct RngStream(ChaCha20Rng);

impl RngStream {
    pub fn new(seed: RngSeed) -> Self {
        let mut rng = ChaCha20Rng::seed_from_u64(seed.seed);
        rng.set_stream(seed.stream);
        Self(rng)
    }
}

impl RngCore for RngStream {
    #[inline]
    fn next_u32(&mut self) -> u32 {
        self.0.next_u32()
    }

    #[inline]
    fn next_u64(&mut self) -> u64 {
        self.0.next_u64()
    }

    #[inline]
    fn fill_bytes(&mut self, dst: &mut [u8]) {
        self.0.fill_bytes(dst)
    }
}
