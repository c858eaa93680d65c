//! Seeded random numbers.
//!
//! The generator is ChaCha8 (`rand_chacha`), seeded from a `u64` through
//! `SeedableRng::seed_from_u64`, with one independent stream per purpose
//! (parameter init, each training epoch, generation). Normal variates use
//! the Box–Muller transform on 53-bit uniforms; both outputs of each pair
//! are consumed. Shuffling is a Fisher–Yates pass drawing `u64` indices, so
//! the raw bit stream and every permutation are identical on every platform.
//! Normal variates go through `ln`/`cos`/`sin` and so are reproducible to the
//! extent the platform's libm is.

use rand::{Rng as _, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::Result;
use crate::tensor::{Scalar, Tensor};

/// Stream used for parameter initialisation.
pub const STREAM_INIT: u64 = 0;
/// Stream used by `vgsn generate --stochastic`.
pub const STREAM_GENERATE: u64 = 1;
/// Training epoch `e` draws from stream `STREAM_EPOCH_BASE + e`.
pub const STREAM_EPOCH_BASE: u64 = 1 << 32;

#[derive(Clone, Debug)]
pub struct Rng {
    seed: u64,
    inner: ChaCha8Rng,
    spare_normal: Option<f64>,
}

impl Rng {
    pub fn new(seed: u64) -> Self {
        Self::with_stream(seed, 0)
    }

    pub fn with_stream(seed: u64, stream: u64) -> Self {
        let mut inner = ChaCha8Rng::seed_from_u64(seed);
        inner.set_stream(stream);
        Self {
            seed,
            inner,
            spare_normal: None,
        }
    }

    /// The generator for training epoch `epoch` (zero based).
    pub fn for_epoch(seed: u64, epoch: usize) -> Self {
        Self::with_stream(seed, STREAM_EPOCH_BASE + epoch as u64)
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }

    /// Uniform in `[0, 1)` with 53 random bits.
    pub fn uniform(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Standard normal variate (Box–Muller).
    pub fn normal(&mut self) -> f64 {
        if let Some(z) = self.spare_normal.take() {
            return z;
        }
        // 1 - u lies in (0, 1], keeping ln finite.
        let u1 = 1.0 - self.uniform();
        let u2 = self.uniform();
        let r = (-2.0 * u1.ln()).sqrt();
        let theta = 2.0 * std::f64::consts::PI * u2;
        self.spare_normal = Some(r * theta.sin());
        r * theta.cos()
    }

    /// Uniform integer in `0..=max`.
    pub fn below_or_eq(&mut self, max: u64) -> u64 {
        self.inner.gen_range(0..=max)
    }

    pub fn shuffle<X>(&mut self, items: &mut [X]) {
        for i in (1..items.len()).rev() {
            let j = self.below_or_eq(i as u64) as usize;
            items.swap(i, j);
        }
    }

    /// A tensor of i.i.d. standard-normal draws.
    pub fn normal_tensor<T: Scalar>(&mut self, shape: &[usize]) -> Result<Tensor<T>> {
        let mut t = Tensor::zeros(shape)?;
        for v in t.data_mut() {
            *v = T::from_f64_lossy(self.normal());
        }
        Ok(t)
    }
}

/// Free-function form of [`Rng::normal_tensor`].
pub fn seeded_normal<T: Scalar>(shape: &[usize], rng: &mut Rng) -> Result<Tensor<T>> {
    rng.normal_tensor(shape)
}
