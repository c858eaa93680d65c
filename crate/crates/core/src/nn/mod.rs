//! Differentiable layers.
//!
//! Parameter structs are generic over their payload `P`: `Tensor<T>` when
//! stored, [`Var`] once bound to a tape for one forward/backward pass.

pub mod activation;
pub mod conv;
pub mod dense;
pub mod loss;
pub mod norm;

use crate::autodiff::{Tape, Var};
use crate::error::Result;
use crate::tensor::{lit, Scalar};

pub use activation::Activation;
pub use conv::Padding;
pub use norm::RunningStats;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Mode {
    /// Batch statistics, running-statistic updates, sampled latent noise.
    Train,
    /// Running statistics; nothing is mutated.
    Eval,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Dense<P> {
    /// `[in, out]`
    pub weight: P,
    /// `[out]`
    pub bias: P,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Conv<P> {
    /// `[kh, kw, Cin, Cout]`
    pub kernel: P,
    /// `[Cout]`; absent when batch norm follows, whose shift makes a bias
    /// redundant.
    pub bias: Option<P>,
    pub stride: usize,
    pub padding: Padding,
}

#[derive(Clone, Debug, PartialEq)]
pub struct BatchNorm<P> {
    pub gamma: P,
    pub beta: P,
}

/// Hyperparameters shared by every batch-norm layer of a model.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BatchNormSettings {
    pub momentum: f64,
    pub epsilon: f64,
}

impl Default for BatchNormSettings {
    fn default() -> Self {
        Self {
            momentum: norm::DEFAULT_MOMENTUM,
            epsilon: norm::DEFAULT_EPSILON,
        }
    }
}

impl<P> Dense<P> {
    pub fn map<Q>(&self, f: &mut impl FnMut(&P) -> Q) -> Dense<Q> {
        Dense {
            weight: f(&self.weight),
            bias: f(&self.bias),
        }
    }

    pub(crate) fn visit<'a>(&'a self, name: &str, f: &mut impl FnMut(String, &'a P)) {
        f(format!("{name}.weight"), &self.weight);
        f(format!("{name}.bias"), &self.bias);
    }

    pub(crate) fn visit_mut<'a>(&'a mut self, name: &str, f: &mut impl FnMut(String, &'a mut P)) {
        f(format!("{name}.weight"), &mut self.weight);
        f(format!("{name}.bias"), &mut self.bias);
    }
}

impl<P> Conv<P> {
    pub fn map<Q>(&self, f: &mut impl FnMut(&P) -> Q) -> Conv<Q> {
        Conv {
            kernel: f(&self.kernel),
            bias: self.bias.as_ref().map(&mut *f),
            stride: self.stride,
            padding: self.padding,
        }
    }

    pub(crate) fn visit<'a>(&'a self, name: &str, f: &mut impl FnMut(String, &'a P)) {
        f(format!("{name}.kernel"), &self.kernel);
        if let Some(b) = &self.bias {
            f(format!("{name}.bias"), b);
        }
    }

    pub(crate) fn visit_mut<'a>(&'a mut self, name: &str, f: &mut impl FnMut(String, &'a mut P)) {
        f(format!("{name}.kernel"), &mut self.kernel);
        if let Some(b) = &mut self.bias {
            f(format!("{name}.bias"), b);
        }
    }
}

impl<P> BatchNorm<P> {
    pub fn map<Q>(&self, f: &mut impl FnMut(&P) -> Q) -> BatchNorm<Q> {
        BatchNorm {
            gamma: f(&self.gamma),
            beta: f(&self.beta),
        }
    }

    pub(crate) fn visit<'a>(&'a self, name: &str, f: &mut impl FnMut(String, &'a P)) {
        f(format!("{name}.gamma"), &self.gamma);
        f(format!("{name}.beta"), &self.beta);
    }

    pub(crate) fn visit_mut<'a>(&'a mut self, name: &str, f: &mut impl FnMut(String, &'a mut P)) {
        f(format!("{name}.gamma"), &mut self.gamma);
        f(format!("{name}.beta"), &mut self.beta);
    }
}

pub fn conv2d<T: Scalar>(tape: &mut Tape<T>, x: Var, p: &Conv<Var>) -> Result<Var> {
    tape.conv2d(x, p.kernel, p.bias, p.stride, p.padding)
}

pub fn conv_transpose2d<T: Scalar>(tape: &mut Tape<T>, x: Var, p: &Conv<Var>) -> Result<Var> {
    tape.conv_transpose2d(x, p.kernel, p.bias, p.stride, p.padding)
}

pub fn dense<T: Scalar>(tape: &mut Tape<T>, x: Var, p: &Dense<Var>) -> Result<Var> {
    tape.dense(x, p.weight, p.bias)
}

/// Batch normalization; in train mode `stats` is updated with the batch
/// statistics.
pub fn batchnorm<T: Scalar>(
    tape: &mut Tape<T>,
    x: Var,
    p: &BatchNorm<Var>,
    stats: &mut RunningStats<T>,
    settings: BatchNormSettings,
    mode: Mode,
) -> Result<Var> {
    let eps = lit::<T>(settings.epsilon);
    match mode {
        Mode::Train => {
            let (y, mean, var) = tape.batchnorm_train(x, p.gamma, p.beta, eps)?;
            stats.update(&mean, &var, lit(settings.momentum));
            Ok(y)
        }
        Mode::Eval => tape.batchnorm_eval(x, p.gamma, p.beta, stats, eps),
    }
}

pub fn activation<T: Scalar>(tape: &mut Tape<T>, x: Var, kind: Activation) -> Result<Var> {
    match kind {
        Activation::Relu => tape.relu(x),
        Activation::Sigmoid => tape.sigmoid(x),
    }
}

pub fn mse_loss<T: Scalar>(tape: &mut Tape<T>, prediction: Var, target: Var) -> Result<Var> {
    tape.mse(prediction, target)
}
