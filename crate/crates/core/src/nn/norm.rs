//! Batch normalization over the last (channel) axis.

use crate::error::{Error, Result};
use crate::tensor::{lit, Scalar, Tensor};

pub const DEFAULT_EPSILON: f64 = 1e-5;
/// Weight of the previous running statistic in each update.
pub const DEFAULT_MOMENTUM: f64 = 0.9;

/// Running per-channel statistics used in eval mode.
#[derive(Clone, Debug, PartialEq)]
pub struct RunningStats<T> {
    pub mean: Tensor<T>,
    pub var: Tensor<T>,
}

impl<T: Scalar> RunningStats<T> {
    pub fn new(channels: usize) -> Result<Self> {
        Ok(Self {
            mean: Tensor::zeros(&[channels])?,
            var: Tensor::full(&[channels], T::one())?,
        })
    }

    pub fn channels(&self) -> usize {
        self.mean.len()
    }

    /// `running = momentum * running + (1 - momentum) * batch`.
    pub fn update(&mut self, batch_mean: &[T], batch_var: &[T], momentum: T) {
        let keep = momentum;
        let take = T::one() - momentum;
        for (r, &m) in self.mean.data_mut().iter_mut().zip(batch_mean) {
            *r = keep * *r + take * m;
        }
        for (r, &v) in self.var.data_mut().iter_mut().zip(batch_var) {
            *r = keep * *r + take * v;
        }
    }
}

/// Result of a train-mode forward pass; the saved values feed the backward
/// pass and the running-statistics update.
pub struct BatchNormTrain<T> {
    pub output: Tensor<T>,
    pub normalized: Tensor<T>,
    pub mean: Vec<T>,
    /// Biased (population) variance of the batch.
    pub var: Vec<T>,
    pub inv_std: Vec<T>,
}

fn channels_of<T: Scalar>(x: &Tensor<T>, gamma: &Tensor<T>, beta: &Tensor<T>) -> Result<usize> {
    let c = *x.shape().last().unwrap_or(&0);
    if gamma.shape() != [c] || beta.shape() != [c] {
        return Err(Error::Shape(format!(
            "batchnorm: gamma {:?} / beta {:?} do not match {c} channels",
            gamma.shape(),
            beta.shape()
        )));
    }
    Ok(c)
}

pub fn batchnorm_train_forward<T: Scalar>(
    x: &Tensor<T>,
    gamma: &Tensor<T>,
    beta: &Tensor<T>,
    epsilon: T,
) -> Result<BatchNormTrain<T>> {
    let c = channels_of(x, gamma, beta)?;
    let n = x.len() / c;
    if n < 2 {
        return Err(Error::Shape(format!(
            "batchnorm: train mode needs at least 2 values per channel, got {n}"
        )));
    }
    // Statistics accumulate in f64 whatever the working precision.
    let mut sum = vec![0.0f64; c];
    for px in x.data().chunks_exact(c) {
        for (s, &v) in sum.iter_mut().zip(px) {
            *s += v.as_f64();
        }
    }
    let mean: Vec<f64> = sum.iter().map(|s| s / n as f64).collect();
    let mut sq = vec![0.0f64; c];
    for px in x.data().chunks_exact(c) {
        for ((s, &v), m) in sq.iter_mut().zip(px).zip(&mean) {
            let d = v.as_f64() - m;
            *s += d * d;
        }
    }
    let var: Vec<f64> = sq.iter().map(|s| s / n as f64).collect();
    let inv_std: Vec<T> = var
        .iter()
        .map(|&v| lit::<T>(1.0 / (v + epsilon.as_f64()).sqrt()))
        .collect();
    let mean_t: Vec<T> = mean.iter().map(|&m| lit(m)).collect();
    let (normalized, output) = affine(x, &mean_t, &inv_std, gamma, beta, c);
    Ok(BatchNormTrain {
        output,
        normalized,
        mean: mean_t,
        var: var.iter().map(|&v| lit(v)).collect(),
        inv_std,
    })
}

/// Eval-mode forward using running statistics. Returns `(normalized, output)`
/// plus the per-channel inverse std used.
pub fn batchnorm_eval_forward<T: Scalar>(
    x: &Tensor<T>,
    gamma: &Tensor<T>,
    beta: &Tensor<T>,
    stats: &RunningStats<T>,
    epsilon: T,
) -> Result<(Tensor<T>, Tensor<T>, Vec<T>)> {
    let c = channels_of(x, gamma, beta)?;
    if stats.channels() != c {
        return Err(Error::Shape("batchnorm: running statistics channel mismatch".into()));
    }
    let inv_std: Vec<T> = stats
        .var
        .data()
        .iter()
        .map(|&v| T::one() / (v + epsilon).sqrt())
        .collect();
    let (normalized, output) = affine(x, stats.mean.data(), &inv_std, gamma, beta, c);
    Ok((normalized, output, inv_std))
}

fn affine<T: Scalar>(
    x: &Tensor<T>,
    mean: &[T],
    inv_std: &[T],
    gamma: &Tensor<T>,
    beta: &Tensor<T>,
    c: usize,
) -> (Tensor<T>, Tensor<T>) {
    let mut xhat = Vec::with_capacity(x.len());
    let mut y = Vec::with_capacity(x.len());
    for px in x.data().chunks_exact(c) {
        for ch in 0..c {
            let h = (px[ch] - mean[ch]) * inv_std[ch];
            xhat.push(h);
            y.push(gamma.data()[ch] * h + beta.data()[ch]);
        }
    }
    (
        Tensor::from_parts(x.shape().to_vec(), xhat),
        Tensor::from_parts(x.shape().to_vec(), y),
    )
}

/// Backward of the train-mode forward: `(dx, dgamma, dbeta)`.
pub fn batchnorm_train_backward<T: Scalar>(
    grad_out: &Tensor<T>,
    normalized: &Tensor<T>,
    gamma: &Tensor<T>,
    inv_std: &[T],
) -> (Tensor<T>, Tensor<T>, Tensor<T>) {
    let c = gamma.len();
    let n = grad_out.len() / c;
    let (dgamma, dbeta) = affine_param_grads(grad_out, normalized, c);
    let nt = lit::<T>(n as f64);
    let mut dx = Vec::with_capacity(grad_out.len());
    for (dy, xh) in grad_out.data().chunks_exact(c).zip(normalized.data().chunks_exact(c)) {
        for ch in 0..c {
            let scale = gamma.data()[ch] * inv_std[ch] / nt;
            dx.push(scale * (nt * dy[ch] - dbeta[ch] - xh[ch] * dgamma[ch]));
        }
    }
    (
        Tensor::from_parts(grad_out.shape().to_vec(), dx),
        Tensor::from_parts(vec![c], dgamma),
        Tensor::from_parts(vec![c], dbeta),
    )
}

/// Backward of the eval-mode forward, where the statistics are constants.
pub fn batchnorm_eval_backward<T: Scalar>(
    grad_out: &Tensor<T>,
    normalized: &Tensor<T>,
    gamma: &Tensor<T>,
    inv_std: &[T],
) -> (Tensor<T>, Tensor<T>, Tensor<T>) {
    let c = gamma.len();
    let (dgamma, dbeta) = affine_param_grads(grad_out, normalized, c);
    let mut dx = Vec::with_capacity(grad_out.len());
    for dy in grad_out.data().chunks_exact(c) {
        for ch in 0..c {
            dx.push(dy[ch] * gamma.data()[ch] * inv_std[ch]);
        }
    }
    (
        Tensor::from_parts(grad_out.shape().to_vec(), dx),
        Tensor::from_parts(vec![c], dgamma),
        Tensor::from_parts(vec![c], dbeta),
    )
}

fn affine_param_grads<T: Scalar>(grad_out: &Tensor<T>, normalized: &Tensor<T>, c: usize) -> (Vec<T>, Vec<T>) {
    let mut dgamma = vec![T::zero(); c];
    let mut dbeta = vec![T::zero(); c];
    for (dy, xh) in grad_out.data().chunks_exact(c).zip(normalized.data().chunks_exact(c)) {
        for ch in 0..c {
            dbeta[ch] += dy[ch];
            dgamma[ch] += dy[ch] * xh[ch];
        }
    }
    (dgamma, dbeta)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ones(c: usize) -> Tensor<f64> {
        Tensor::full(&[c], 1.0).unwrap()
    }

    fn zeros(c: usize) -> Tensor<f64> {
        Tensor::zeros(&[c]).unwrap()
    }

    #[test]
    fn already_standard_values() {
        let x = Tensor::from_slice(&[2, 1, 1, 1], &[-1.0, 1.0]).unwrap();
        let r = batchnorm_train_forward(&x, &ones(1), &zeros(1), 1e-5).unwrap();
        for (&y, e) in r.output.data().iter().zip([-1.0, 1.0]) {
            assert!((y - e).abs() < 1e-5);
        }
    }

    #[test]
    fn mean_one_var_one() {
        let x = Tensor::from_slice(&[2, 1], &[0.0, 2.0]).unwrap();
        let r = batchnorm_train_forward(&x, &ones(1), &zeros(1), 1e-5).unwrap();
        let expect = 1.0 / (1.0f64 + 1e-5).sqrt();
        assert!((r.output.data()[0] + expect).abs() < 1e-12);
        assert!((r.output.data()[1] - expect).abs() < 1e-12);
        assert!((expect - 0.999995).abs() < 1e-6);
    }

    #[test]
    fn affine_parameters() {
        let x = Tensor::from_slice(&[4, 1], &[3.0, -1.0, 0.5, 2.0]).unwrap();
        let plain = batchnorm_train_forward(&x, &ones(1), &zeros(1), 1e-5).unwrap();
        let gamma = Tensor::full(&[1], 2.0).unwrap();
        let beta = Tensor::full(&[1], 3.0).unwrap();
        let scaled = batchnorm_train_forward(&x, &gamma, &beta, 1e-5).unwrap();
        for (&a, &b) in plain.output.data().iter().zip(scaled.output.data()) {
            assert!((2.0 * a + 3.0 - b).abs() < 1e-12);
        }
    }

    #[test]
    fn too_small_batch() {
        let x = Tensor::from_slice(&[1, 1, 1, 2], &[1.0, 2.0]).unwrap();
        assert!(batchnorm_train_forward(&x, &ones(2), &zeros(2), 1e-5).is_err());
    }

    #[test]
    fn running_update() {
        let mut s = RunningStats::<f64>::new(1).unwrap();
        s.update(&[1.0], &[3.0], 0.9);
        assert!((s.mean.data()[0] - 0.1).abs() < 1e-15);
        assert!((s.var.data()[0] - 1.2).abs() < 1e-15);
    }

    #[test]
    fn eval_uses_running_stats() {
        let mut s = RunningStats::<f64>::new(1).unwrap();
        s.mean.data_mut()[0] = 2.0;
        s.var.data_mut()[0] = 4.0;
        let x = Tensor::from_slice(&[1, 1], &[6.0]).unwrap();
        let (_, y, _) = batchnorm_eval_forward(&x, &ones(1), &zeros(1), &s, 0.0).unwrap();
        assert_eq!(y.data(), &[2.0]);
    }
}
