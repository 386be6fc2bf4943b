//! Deterministic random-number plumbing.
//!
//! Every stochastic ingredient of an experiment (truth draw, data noise,
//! ensemble initialization, update perturbations, jitter) pulls from its own
//! named substream of a ChaCha12 generator, so runs are reproducible and the
//! streams stay independent no matter how many numbers each consumer takes.
//! The Gaussian and uniform converters are written out explicitly to keep the
//! produced sequences stable across dependency upgrades.

use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha12Rng;

use alloc::vec::Vec;

/// Named substreams, consumed in this order by the experiment driver.
pub mod stream {
    /// Draw of the ground-truth field coefficients.
    pub const TRUTH_FIELD: u64 = 0;
    /// Measurement noise added to the synthetic data.
    pub const DATA_NOISE: u64 = 1;
    /// Initial ensemble of hyperparameters.
    pub const INIT_HYPER: u64 = 2;
    /// Initial ensemble of field coordinates.
    pub const INIT_FIELD: u64 = 3;
    /// Observation perturbations inside the Kalman updates.
    pub const UPDATE_PERTURBATIONS: u64 = 4;
    /// Additive jitter used by the inflation variants.
    pub const JITTER: u64 = 5;
}

/// One step of the splitmix64 scrambler.
fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9E37_79B9_7F4A_7C15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Deterministic generator for one named substream of a master seed.
#[derive(Debug, Clone)]
pub struct Prng {
    inner: ChaCha12Rng,
}

impl Prng {
    /// Creates the generator for `(seed, stream)`. Distinct pairs yield
    /// independent ChaCha keys via splitmix64 expansion.
    pub fn substream(seed: u64, stream: u64) -> Self {
        let mut state = seed ^ stream.wrapping_mul(0xA076_1D64_78BD_642F);
        let mut key = [0u8; 32];
        for chunk in key.chunks_exact_mut(8) {
            chunk.copy_from_slice(&splitmix64(&mut state).to_le_bytes());
        }
        Prng {
            inner: ChaCha12Rng::from_seed(key),
        }
    }

    /// Next raw 64-bit word.
    #[inline]
    pub fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }

    /// Uniform draw in `[0, 1)` using the top 53 bits.
    #[inline]
    pub fn next_uniform(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / 9_007_199_254_740_992.0)
    }

    /// Uniform draw in `[lo, hi)`.
    #[inline]
    pub fn next_uniform_in(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.next_uniform()
    }

    /// Standard normal draw via Box–Muller (cosine branch only).
    pub fn next_gaussian(&mut self) -> f64 {
        // 1 - U lies in (0, 1], which keeps the logarithm finite.
        let u1 = 1.0 - self.next_uniform();
        let u2 = self.next_uniform();
        libm::sqrt(-2.0 * libm::log(u1)) * libm::cos(2.0 * core::f64::consts::PI * u2)
    }

    /// Fills `out` with independent standard normal draws.
    pub fn fill_gaussian(&mut self, out: &mut [f64]) {
        for v in out.iter_mut() {
            *v = self.next_gaussian();
        }
    }

    /// Convenience: a fresh vector of `n` standard normal draws.
    pub fn gaussian_vec(&mut self, n: usize) -> Vec<f64> {
        let mut out = alloc::vec![0.0; n];
        self.fill_gaussian(&mut out);
        out
    }
}
