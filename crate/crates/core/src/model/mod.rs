//! The grid-setting network, its baseline VAE variant, and the model file
//! format.

pub mod config;
pub mod grid;
pub mod io;
pub mod params;
pub mod vgsn;

use crate::autodiff::{OpKind, Tape, Var};
use crate::error::Result;
use crate::nn::Mode;
use crate::tensor::{lit, Scalar, Tensor};

pub use config::{GridSpec, ModelConfig, Variant};
pub use params::{ModelStats, VgsnParams};
pub use vgsn::{LatentStats, Sampling};

/// Parameters, batch-norm running statistics and the configuration they
/// were built for.
#[derive(Clone, Debug, PartialEq)]
pub struct Model<T> {
    pub config: ModelConfig,
    pub params: VgsnParams<Tensor<T>>,
    pub stats: ModelStats<T>,
}

/// Loss value and parameter gradients of one batch.
pub struct LossAndGrads<T> {
    pub loss: T,
    pub grads: VgsnParams<Tensor<T>>,
}

impl<T: Scalar> Model<T> {
    pub fn new(config: ModelConfig, seed: u64) -> Result<Self> {
        let params = VgsnParams::init(&config, seed)?;
        let stats = ModelStats::new(&config)?;
        Ok(Self { config, params, stats })
    }

    /// Records every parameter on `tape` as a tracked leaf.
    pub fn bind(&self, tape: &mut Tape<T>) -> VgsnParams<Var> {
        self.params.map(|t| tape.param(t.clone()))
    }

    pub fn parameter_count(&self) -> usize {
        self.params.parameter_count()
    }

    /// Eval-mode forward pass on `[B, H, W, 1]` images.
    pub fn generate(&self, images: &Tensor<T>, sampling: &Sampling<T>) -> Result<Tensor<T>> {
        let mut tape = Tape::new();
        let bound = self.params.map(|t| tape.constant(t.clone()));
        let x = tape.constant(images.clone());
        let mut stats = self.stats.clone();
        let out = vgsn::forward(&mut tape, &bound, &mut stats, &self.config, x, sampling, Mode::Eval)?;
        Ok(tape.value(out.image)?.clone())
    }

    /// MSE of the reconstruction of `inputs` against `targets` (plus
    /// `kl_weight` times the Gaussian KL term when non-zero) and its gradient
    /// with respect to every parameter. In train mode the running statistics
    /// are updated.
    pub fn loss_and_grads(
        &mut self,
        inputs: &Tensor<T>,
        targets: &Tensor<T>,
        sampling: &Sampling<T>,
        mode: Mode,
        kl_weight: f64,
    ) -> Result<LossAndGrads<T>> {
        self.loss_and_grads_with(inputs, targets, sampling, mode, kl_weight, None)
    }

    #[doc(hidden)]
    pub fn loss_and_grads_with(
        &mut self,
        inputs: &Tensor<T>,
        targets: &Tensor<T>,
        sampling: &Sampling<T>,
        mode: Mode,
        kl_weight: f64,
        corrupt: Option<OpKind>,
    ) -> Result<LossAndGrads<T>> {
        let mut tape = Tape::new();
        if let Some(kind) = corrupt {
            tape.corrupt_backward(kind);
        }
        let bound = self.bind(&mut tape);
        let x = tape.constant(inputs.clone());
        let y = tape.constant(targets.clone());
        let out = vgsn::forward(&mut tape, &bound, &mut self.stats, &self.config, x, sampling, mode)?;
        let mut loss = tape.mse(out.image, y)?;
        if kl_weight != 0.0 {
            let kl = tape.gaussian_kl(out.latent.mu, out.latent.sigma)?;
            let kl = tape.scale(kl, lit(kl_weight))?;
            loss = tape.add(loss, kl)?;
        }
        let value = tape.value(loss)?.item()?;
        let mut grads = tape.backward(loss)?;
        let mut tensors = self.params.tensors().into_iter();
        let grads = bound.map(|&v| grads.take_or_zero(v, tensors.next().expect("same layout")));
        Ok(LossAndGrads { loss: value, grads })
    }

    /// Loss only, without recording gradients for the caller.
    pub fn loss(
        &mut self,
        inputs: &Tensor<T>,
        targets: &Tensor<T>,
        sampling: &Sampling<T>,
        mode: Mode,
        kl_weight: f64,
    ) -> Result<T> {
        let mut tape = Tape::new();
        let bound = self.params.map(|t| tape.constant(t.clone()));
        let x = tape.constant(inputs.clone());
        let y = tape.constant(targets.clone());
        let out = vgsn::forward(&mut tape, &bound, &mut self.stats, &self.config, x, sampling, mode)?;
        let mut loss = tape.mse(out.image, y)?;
        if kl_weight != 0.0 {
            let kl = tape.gaussian_kl(out.latent.mu, out.latent.sigma)?;
            let kl = tape.scale(kl, lit(kl_weight))?;
            loss = tape.add(loss, kl)?;
        }
        tape.value(loss)?.item()
    }

    pub fn cast<U: Scalar>(&self) -> Model<U> {
        Model {
            config: self.config.clone(),
            params: self.params.cast(),
            stats: ModelStats {
                encoder: self
                    .stats
                    .encoder
                    .iter()
                    .map(|s| crate::nn::RunningStats {
                        mean: s.mean.cast(),
                        var: s.var.cast(),
                    })
                    .collect(),
                decoder: self
                    .stats
                    .decoder
                    .iter()
                    .map(|s| crate::nn::RunningStats {
                        mean: s.mean.cast(),
                        var: s.var.cast(),
                    })
                    .collect(),
            },
        }
    }
}
