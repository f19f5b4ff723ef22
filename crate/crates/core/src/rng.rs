//! SplitMix64 pseudo-random generator.
//!
//! Every random draw in this crate goes through [`SplitMix64`] so that streams
//! can be reproduced bit for bit in any language:
//!
//! ```text
//! state  = state + 0x9E3779B97F4A7C15            (wrapping)
//! z      = state
//! z      = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9  (wrapping)
//! z      = (z ^ (z >> 27)) * 0x94D049BB133111EB  (wrapping)
//! output = z ^ (z >> 31)
//! ```
//!
//! Derived draws:
//!
//! * `next_f64`: `(next_u64() >> 11) * 2^-53`, uniform in `[0, 1)`.
//! * `next_index(n)`: `floor(next_f64() * n)`, clamped to `n - 1`.
//! * `next_gaussian`: Box-Muller cosine branch with `u1 = 1 - next_f64()`
//!   (so `u1` is in `(0, 1]`) drawn before `u2 = next_f64()`; the sine branch is
//!   discarded, so every normal variate consumes exactly two words.

use std::f64::consts::TAU;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SplitMix64 {
    state: u64,
}

impl SplitMix64 {
    pub fn new(seed: u64) -> Self {
        Self { state: seed }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(0x9E37_79B9_7F4A_7C15);
        let mut z = self.state;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }

    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform in `[lo, hi)`.
    pub fn uniform(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.next_f64()
    }

    pub fn next_index(&mut self, n: usize) -> usize {
        debug_assert!(n > 0);
        ((self.next_f64() * n as f64) as usize).min(n - 1)
    }

    pub fn next_gaussian(&mut self) -> f64 {
        let u1 = 1.0 - self.next_f64();
        let u2 = self.next_f64();
        (-2.0 * u1.ln()).sqrt() * (TAU * u2).cos()
    }

    /// A child generator seeded from this stream.
    pub fn split(&mut self) -> Self {
        Self::new(self.next_u64())
    }
}
