//! Counter-based random streams.
//!
//! Every draw is a pure function of `(seed, stream, counter)`, so results do not
//! depend on how particles are split across workers. Streams are keyed with the
//! splitmix64 finalizer and advanced as a Weyl sequence.

use rand::RngCore;
use rand_distr::{Distribution, StandardNormal};

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

#[inline]
fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derives a 64-bit key from a list of words. Order matters.
#[inline]
pub fn derive_key(words: &[u64]) -> u64 {
    let mut k = 0x243F_6A88_85A3_08D3u64;
    for &w in words {
        k = mix64(k ^ mix64(w.wrapping_add(GOLDEN)));
    }
    k
}

/// A deterministic stream identified by a key; `counter` is the only state.
#[derive(Debug, Clone)]
pub struct StreamRng {
    key: u64,
    counter: u64,
}

impl StreamRng {
    pub fn new(seed: u64, stream: u64) -> Self {
        Self::from_key(derive_key(&[seed, stream]))
    }

    pub fn from_key(key: u64) -> Self {
        Self { key, counter: 0 }
    }

    /// Stream used for the injected noise of one particle at one grid step.
    pub fn for_step(seed: u64, particle: u64, step: u64) -> Self {
        Self::from_key(derive_key(&[seed, particle, step, 0x5EED]))
    }

    #[inline]
    pub fn uniform(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / 9_007_199_254_740_992.0)
    }

    /// Uniform on the open interval (0, 1).
    #[inline]
    pub fn uniform_open(&mut self) -> f64 {
        ((self.next_u64() >> 11) as f64 + 0.5) * (1.0 / 9_007_199_254_740_992.0)
    }

    #[inline]
    pub fn normal(&mut self) -> f64 {
        StandardNormal.sample(self)
    }
}

impl RngCore for StreamRng {
    #[inline]
    fn next_u32(&mut self) -> u32 {
        (self.next_u64() >> 32) as u32
    }

    #[inline]
    fn next_u64(&mut self) -> u64 {
        self.counter = self.counter.wrapping_add(1);
        mix64(self.key.wrapping_add(self.counter.wrapping_mul(GOLDEN)))
    }

    fn fill_bytes(&mut self, dst: &mut [u8]) {
        for chunk in dst.chunks_mut(8) {
            let bytes = self.next_u64().to_le_bytes();
            chunk.copy_from_slice(&bytes[..chunk.len()]);
        }
    }
}
