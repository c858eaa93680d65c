//! SGD, Adam and RMSprop.
//!
//! An [`OptimizerState`] owns the moment buffers for an ordered list of
//! parameter tensors. Buffers are allocated on the first step and must keep
//! matching the parameter shapes afterwards. A step validates every gradient
//! before touching any parameter, so a non-finite gradient leaves both the
//! parameters and the state unchanged.

use std::fmt;

use crate::error::{Error, Result};
use crate::model::VgsnParams;
use crate::tensor::{lit, Scalar, Tensor};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum OptimizerKind {
    Sgd,
    Adam,
    RmsProp,
}

impl OptimizerKind {
    pub const ALL: [OptimizerKind; 3] = [OptimizerKind::Sgd, OptimizerKind::Adam, OptimizerKind::RmsProp];

    pub fn as_str(self) -> &'static str {
        match self {
            OptimizerKind::Sgd => "sgd",
            OptimizerKind::Adam => "adam",
            OptimizerKind::RmsProp => "rmsprop",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s.to_ascii_lowercase().as_str() {
            "sgd" => Some(OptimizerKind::Sgd),
            "adam" => Some(OptimizerKind::Adam),
            "rmsprop" => Some(OptimizerKind::RmsProp),
            _ => None,
        }
    }

    pub fn default_learning_rate(self) -> f64 {
        match self {
            OptimizerKind::Sgd => 0.01,
            OptimizerKind::Adam | OptimizerKind::RmsProp => 0.001,
        }
    }
}

impl fmt::Display for OptimizerKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Optimizer hyperparameters; unused fields are ignored by the other kinds.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OptimizerSettings {
    pub kind: OptimizerKind,
    pub learning_rate: f64,
    /// Adam first-moment decay.
    pub beta1: f64,
    /// Adam second-moment decay.
    pub beta2: f64,
    /// RMSprop decay.
    pub rho: f64,
    /// Denominator offset for Adam and RMSprop.
    pub epsilon: f64,
}

impl OptimizerSettings {
    pub fn new(kind: OptimizerKind) -> Self {
        Self {
            kind,
            learning_rate: kind.default_learning_rate(),
            beta1: 0.9,
            beta2: 0.999,
            rho: 0.9,
            epsilon: 1e-8,
        }
    }

    pub fn with_learning_rate(mut self, learning_rate: f64) -> Self {
        self.learning_rate = learning_rate;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let unit = |x: f64| (0.0..1.0).contains(&x);
        if !(self.learning_rate.is_finite() && self.learning_rate > 0.0) {
            return Err(Error::Config(format!("learning rate must be positive, got {}", self.learning_rate)));
        }
        if !(unit(self.beta1) && unit(self.beta2) && unit(self.rho)) {
            return Err(Error::Config("decay rates must lie in [0, 1)".into()));
        }
        if !(self.epsilon.is_finite() && self.epsilon >= 0.0) {
            return Err(Error::Config(format!("bad epsilon {}", self.epsilon)));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct OptimizerState<T> {
    pub settings: OptimizerSettings,
    /// Number of completed steps.
    pub step: u64,
    /// Adam first moments.
    pub m: Vec<Tensor<T>>,
    /// Adam second moments, or the RMSprop running mean square.
    pub v: Vec<Tensor<T>>,
}

impl<T: Scalar> OptimizerState<T> {
    pub fn new(settings: OptimizerSettings) -> Result<Self> {
        settings.validate()?;
        Ok(Self {
            settings,
            step: 0,
            m: Vec::new(),
            v: Vec::new(),
        })
    }

    pub fn kind(&self) -> OptimizerKind {
        self.settings.kind
    }

    /// Applies one update to `params` in place.
    pub fn step(&mut self, params: &mut [&mut Tensor<T>], grads: &[&Tensor<T>]) -> Result<()> {
        if params.len() != grads.len() {
            return Err(Error::Shape(format!(
                "{} parameters but {} gradients",
                params.len(),
                grads.len()
            )));
        }
        for (i, (p, g)) in params.iter().zip(grads).enumerate() {
            p.expect_same_shape(g, "optimizer step")?;
            if !g.is_finite() {
                return Err(Error::NonFinite(format!("gradient of parameter {i} is not finite")));
            }
        }
        let uses_m = self.kind() == OptimizerKind::Adam;
        let uses_v = self.kind() != OptimizerKind::Sgd;
        if uses_v && self.v.is_empty() {
            self.v = params.iter().map(|p| Tensor::from_parts(p.shape().to_vec(), vec![T::zero(); p.len()])).collect();
            if uses_m {
                self.m = self.v.clone();
            }
        }
        if uses_v {
            if self.v.len() != params.len() {
                return Err(Error::Shape(format!(
                    "optimizer holds {} buffers but got {} parameters",
                    self.v.len(),
                    params.len()
                )));
            }
            for (p, v) in params.iter().zip(&self.v) {
                p.expect_same_shape(v, "optimizer buffer")?;
            }
        }

        let s = self.settings;
        let lr: T = lit(s.learning_rate);
        let eps: T = lit(s.epsilon);
        self.step += 1;
        match s.kind {
            OptimizerKind::Sgd => {
                for (p, g) in params.iter_mut().zip(grads) {
                    for (w, &d) in p.data_mut().iter_mut().zip(g.data()) {
                        *w -= lr * d;
                    }
                }
            }
            OptimizerKind::Adam => {
                let (b1, b2): (T, T) = (lit(s.beta1), lit(s.beta2));
                let t = i32::try_from(self.step).unwrap_or(i32::MAX);
                let c1 = T::one() - b1.powi(t);
                let c2 = T::one() - b2.powi(t);
                for (((p, g), m), v) in params.iter_mut().zip(grads).zip(&mut self.m).zip(&mut self.v) {
                    let it = p.data_mut().iter_mut().zip(g.data()).zip(m.data_mut()).zip(v.data_mut());
                    for (((w, &d), m), v) in it {
                        *m = b1 * *m + (T::one() - b1) * d;
                        *v = b2 * *v + (T::one() - b2) * d * d;
                        let m_hat = *m / c1;
                        let v_hat = *v / c2;
                        *w -= lr * m_hat / (v_hat.sqrt() + eps);
                    }
                }
            }
            OptimizerKind::RmsProp => {
                let rho: T = lit(s.rho);
                for ((p, g), v) in params.iter_mut().zip(grads).zip(&mut self.v) {
                    for ((w, &d), v) in p.data_mut().iter_mut().zip(g.data()).zip(v.data_mut()) {
                        *v = rho * *v + (T::one() - rho) * d * d;
                        *w -= lr * d / (v.sqrt() + eps);
                    }
                }
            }
        }
        for (i, p) in params.iter().enumerate() {
            if !p.is_finite() {
                return Err(Error::NonFinite(format!("parameter {i} became non-finite")));
            }
        }
        Ok(())
    }

    /// One update of every model parameter.
    pub fn step_model(&mut self, params: &mut VgsnParams<Tensor<T>>, grads: &VgsnParams<Tensor<T>>) -> Result<()> {
        let grads = grads.tensors();
        let mut params = params.tensors_mut();
        self.step(&mut params, &grads)
    }
}

fn single_step<T: Scalar>(settings: OptimizerSettings, state: &mut OptimizerState<T>, param: &mut Tensor<T>, grad: &Tensor<T>) -> Result<()> {
    if state.kind() != settings.kind {
        return Err(Error::Config(format!(
            "{} step on {} state",
            settings.kind,
            state.kind()
        )));
    }
    state.step(&mut [param], &[grad])
}

/// `θ ← θ − η·g`.
pub fn sgd_step<T: Scalar>(param: &mut Tensor<T>, grad: &Tensor<T>, state: &mut OptimizerState<T>) -> Result<()> {
    single_step(OptimizerSettings::new(OptimizerKind::Sgd), state, param, grad)
}

/// Bias-corrected Adam update.
pub fn adam_step<T: Scalar>(param: &mut Tensor<T>, grad: &Tensor<T>, state: &mut OptimizerState<T>) -> Result<()> {
    single_step(OptimizerSettings::new(OptimizerKind::Adam), state, param, grad)
}

/// `v ← ρ·v + (1−ρ)·g²; θ ← θ − η·g / (√v + ε)`.
pub fn rmsprop_step<T: Scalar>(param: &mut Tensor<T>, grad: &Tensor<T>, state: &mut OptimizerState<T>) -> Result<()> {
    single_step(OptimizerSettings::new(OptimizerKind::RmsProp), state, param, grad)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn scalar(x: f64) -> Tensor<f64> {
        Tensor::from_slice(&[1], &[x]).unwrap()
    }

    fn state(kind: OptimizerKind, lr: f64) -> OptimizerState<f64> {
        OptimizerState::new(OptimizerSettings::new(kind).with_learning_rate(lr)).unwrap()
    }

    #[test]
    fn sgd_single_step() {
        let mut p = scalar(1.0);
        sgd_step(&mut p, &scalar(0.5), &mut state(OptimizerKind::Sgd, 0.1)).unwrap();
        assert_eq!(p.data()[0], 0.95);
    }

    #[test]
    fn rmsprop_first_step() {
        let mut p = scalar(0.0);
        rmsprop_step(&mut p, &scalar(1.0), &mut state(OptimizerKind::RmsProp, 0.01)).unwrap();
        assert!((p.data()[0] + 0.01 / (0.1f64.sqrt() + 1e-8)).abs() < 1e-15);
    }

    #[test]
    fn non_finite_gradient_leaves_everything_untouched() {
        let mut p = scalar(1.0);
        let mut s = state(OptimizerKind::Adam, 0.1);
        let err = adam_step(&mut p, &scalar(0.0).map(|_| f64::NAN), &mut s);
        assert!(matches!(err, Err(Error::NonFinite(_))));
        assert_eq!(p.data()[0], 1.0);
        assert_eq!(s.step, 0);
    }

    #[test]
    fn kind_mismatch_is_rejected() {
        let mut p = scalar(1.0);
        assert!(adam_step(&mut p, &scalar(1.0), &mut state(OptimizerKind::Sgd, 0.1)).is_err());
    }

    #[test]
    fn bad_settings() {
        let s = OptimizerSettings::new(OptimizerKind::Sgd).with_learning_rate(0.0);
        assert!(OptimizerState::<f32>::new(s).is_err());
    }

    #[test]
    fn buffer_shape_mismatch() {
        let mut s = state(OptimizerKind::RmsProp, 0.1);
        let mut p = scalar(1.0);
        rmsprop_step(&mut p, &scalar(1.0), &mut s).unwrap();
        let mut q = Tensor::from_slice(&[2], &[1.0, 2.0]).unwrap();
        assert!(matches!(
            rmsprop_step(&mut q, &Tensor::from_slice(&[2], &[1.0, 1.0]).unwrap(), &mut s),
            Err(Error::Shape(_))
        ));
    }
}
