//! Reproducible Gaussian sampling.
//!
//! All randomness in the crate flows through [`GaussianSource`], a ChaCha8
//! counter-based generator keyed by a `(seed, stream)` pair. Normal variates
//! come from the Box–Muller transform applied to consecutive uniform pairs, so
//! a given `(seed, stream)` yields the same sequence on every platform.
//!
//! Circularly-symmetric complex Gaussians `CN(0, 1)` have real and imaginary
//! parts i.i.d. `N(0, 1/2)`, i.e. `E|z|^2 = 1`.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::f64::consts::{FRAC_1_SQRT_2, TAU};

/// Stream ids used by the experiment pipeline. Distinct streams of the same
/// seed are statistically independent.
pub mod streams {
    pub const CHANNEL: u64 = 0;
    pub const PERTURBATION: u64 = 1;
    pub const RANDOMIZATION: u64 = 2;
    pub const TIGHTNESS: u64 = 3;
}

#[derive(Debug, Clone)]
pub struct GaussianSource {
    rng: ChaCha8Rng,
    spare: Option<f64>,
}

impl GaussianSource {
    pub fn new(seed: u64, stream: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream);
        Self { rng, spare: None }
    }

    /// Uniform on `[0, 1)`.
    pub fn uniform(&mut self) -> f64 {
        self.rng.random::<f64>()
    }

    /// Box–Muller pair of independent `N(0, 1)` variates.
    pub fn normal_pair(&mut self) -> (f64, f64) {
        // u1 in (0, 1] keeps the log finite.
        let u1 = 1.0 - self.uniform();
        let u2 = self.uniform();
        let r = (-2.0 * u1.ln()).sqrt();
        let (s, c) = (TAU * u2).sin_cos();
        (r * c, r * s)
    }

    pub fn normal(&mut self) -> f64 {
        if let Some(z) = self.spare.take() {
            return z;
        }
        let (a, b) = self.normal_pair();
        self.spare = Some(b);
        a
    }

    /// One `CN(0, 1)` draw; consumes exactly one Box–Muller pair.
    pub fn complex_normal(&mut self) -> Complex64 {
        let (a, b) = self.normal_pair();
        Complex64::new(a * FRAC_1_SQRT_2, b * FRAC_1_SQRT_2)
    }

    pub fn complex_normal_vec(&mut self, n: usize) -> Vec<Complex64> {
        (0..n).map(|_| self.complex_normal()).collect()
    }

    pub fn normal_vec(&mut self, n: usize) -> Vec<f64> {
        (0..n).map(|_| self.normal()).collect()
    }
}

/// SplitMix64 finalizer; derives well-spread child seeds from a master seed.
pub fn derive_seed(master: u64, index: u64) -> u64 {
    let mut z = master
        .wrapping_add(0x9E37_79B9_7F4A_7C15)
        .wrapping_add(index.wrapping_mul(0xBF58_476D_1CE4_E5B9));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}
