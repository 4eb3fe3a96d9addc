//! Deterministic random draws over a named, published generator.
//!
//! All randomized operations in this crate draw from ChaCha with 8 rounds,
//! seeded from a 64-bit value placed little-endian in the first 8 bytes of
//! the 256-bit key. Reports and manifests record the generator under the
//! name [`ALGORITHM`]. Independent parallel streams come from the ChaCha
//! stream counter, so batch item `i` can own stream `i` and results do not
//! depend on worker count or scheduling.
//!
//! The derived draws are fixed here, not delegated to a distributions
//! library, so regression-pinned outputs survive dependency upgrades:
//!
//! * `bernoulli(p)`: one `u64` word `u`; true iff `u < floor(p * 2^64)`.
//! * `below(n)`: one `u64` word reduced modulo `n` (the modulo bias is below
//!   `n / 2^64`, negligible for the single-digit ranges used here).
//! * `shuffle`: Fisher-Yates from the top index down, one `below` per step.

use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Generator name recorded in manifests and reports.
pub const ALGORITHM: &str = "chacha8";

/// Seedable deterministic generator; see the module docs for the contract.
#[derive(Debug, Clone)]
pub struct Prng {
    inner: ChaCha8Rng,
}

impl Prng {
    pub fn from_seed(seed: u64) -> Self {
        let mut key = [0u8; 32];
        key[..8].copy_from_slice(&seed.to_le_bytes());
        Prng {
            inner: ChaCha8Rng::from_seed(key),
        }
    }

    /// Same seed, independent stream. Streams with distinct indices never
    /// overlap.
    pub fn from_seed_stream(seed: u64, stream: u64) -> Self {
        let mut rng = Self::from_seed(seed);
        rng.inner.set_stream(stream);
        rng
    }

    pub fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }

    /// Bernoulli draw with success probability `p` in `[0, 1]`.
    pub fn bernoulli(&mut self, p: f64) -> bool {
        debug_assert!((0.0..=1.0).contains(&p));
        // 2^64 is exactly representable; p * 2^64 saturates to 2^64 at p = 1.
        let threshold = (p * TWO_POW_64) as u128;
        (self.next_u64() as u128) < threshold
    }

    /// Uniform draw from `0..n`.
    pub fn below(&mut self, n: u64) -> u64 {
        debug_assert!(n > 0);
        self.next_u64() % n
    }

    /// Uniform draw from `[0, 1)` with 53 bits of precision.
    pub fn unit_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// In-place Fisher-Yates shuffle.
    pub fn shuffle<T>(&mut self, items: &mut [T]) {
        for i in (1..items.len()).rev() {
            let j = self.below(i as u64 + 1) as usize;
            items.swap(i, j);
        }
    }
}

const TWO_POW_64: f64 = 18446744073709551616.0;
