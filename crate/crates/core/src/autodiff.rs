//! Reverse-mode differentiation over tensors.
//!
//! A [`Tape`] records every operation of one forward pass in execution
//! order. [`Tape::backward`] walks it once in reverse, accumulating
//! gradients additively into every node that depends on a tracked leaf.
//! Each operation checks its output for NaN/Inf and fails instead of
//! recording a non-finite value.
//!
//! ```
//! use vgsn_core::autodiff::Tape;
//! use vgsn_core::Tensor;
//!
//! let mut tape = Tape::<f64>::new();
//! let x = tape.param(Tensor::from_slice(&[2], &[2.0, -3.0]).unwrap());
//! let sq = tape.mul(x, x).unwrap();
//! let loss = tape.sum(sq).unwrap();
//! let grads = tape.backward(loss).unwrap();
//! assert_eq!(grads.get(x).unwrap().data(), &[4.0, -6.0]);
//! ```

use std::sync::atomic::{AtomicU64, Ordering};

use crate::error::{Error, Result};
use crate::model::grid;
use crate::nn::activation;
use crate::nn::conv::{self, Padding};
use crate::nn::dense;
use crate::nn::loss;
use crate::nn::norm::{self, RunningStats};
use crate::tensor::{lit, Scalar, Tensor};

static NEXT_TAPE_ID: AtomicU64 = AtomicU64::new(1);

/// Handle to a value recorded on a specific tape.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Var {
    tape: u64,
    index: usize,
}

/// Operation families, used to name a recorded op and for fault injection.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum OpKind {
    Leaf,
    Add,
    Mul,
    Scale,
    Exp,
    Sum,
    Mean,
    Reshape,
    Relu,
    Sigmoid,
    Dense,
    Conv2d,
    ConvTranspose2d,
    BatchNorm,
    Mse,
    GaussianKl,
    AssembleTiles,
}

impl OpKind {
    pub fn parse(name: &str) -> Option<Self> {
        Some(match name {
            "add" => OpKind::Add,
            "mul" => OpKind::Mul,
            "scale" => OpKind::Scale,
            "exp" => OpKind::Exp,
            "sum" => OpKind::Sum,
            "mean" => OpKind::Mean,
            "reshape" => OpKind::Reshape,
            "relu" => OpKind::Relu,
            "sigmoid" => OpKind::Sigmoid,
            "dense" => OpKind::Dense,
            "conv2d" => OpKind::Conv2d,
            "conv-transpose2d" => OpKind::ConvTranspose2d,
            "batchnorm" => OpKind::BatchNorm,
            "mse" => OpKind::Mse,
            "gaussian-kl" => OpKind::GaussianKl,
            "assemble-tiles" => OpKind::AssembleTiles,
            _ => return None,
        })
    }
}

enum Op<T> {
    Leaf,
    Add(Var, Var),
    Mul(Var, Var),
    Scale(Var, T),
    Exp(Var),
    Sum(Var),
    Mean(Var),
    Reshape(Var),
    Relu(Var),
    Sigmoid(Var),
    Dense {
        x: Var,
        w: Var,
        b: Var,
    },
    Conv2d {
        x: Var,
        k: Var,
        b: Option<Var>,
        stride: usize,
        padding: Padding,
    },
    ConvTranspose2d {
        x: Var,
        k: Var,
        b: Option<Var>,
        stride: usize,
        padding: Padding,
    },
    BatchNorm {
        x: Var,
        gamma: Var,
        beta: Var,
        normalized: Tensor<T>,
        inv_std: Vec<T>,
        batch_stats: bool,
    },
    Mse {
        prediction: Var,
        target: Var,
    },
    GaussianKl {
        mu: Var,
        log_scale: Var,
    },
    AssembleTiles {
        tiles: Var,
        grid: usize,
    },
}

impl<T> Op<T> {
    fn kind(&self) -> OpKind {
        match self {
            Op::Leaf => OpKind::Leaf,
            Op::Add(..) => OpKind::Add,
            Op::Mul(..) => OpKind::Mul,
            Op::Scale(..) => OpKind::Scale,
            Op::Exp(_) => OpKind::Exp,
            Op::Sum(_) => OpKind::Sum,
            Op::Mean(_) => OpKind::Mean,
            Op::Reshape(_) => OpKind::Reshape,
            Op::Relu(_) => OpKind::Relu,
            Op::Sigmoid(_) => OpKind::Sigmoid,
            Op::Dense { .. } => OpKind::Dense,
            Op::Conv2d { .. } => OpKind::Conv2d,
            Op::ConvTranspose2d { .. } => OpKind::ConvTranspose2d,
            Op::BatchNorm { .. } => OpKind::BatchNorm,
            Op::Mse { .. } => OpKind::Mse,
            Op::GaussianKl { .. } => OpKind::GaussianKl,
            Op::AssembleTiles { .. } => OpKind::AssembleTiles,
        }
    }
}

struct Node<T> {
    value: Tensor<T>,
    op: Op<T>,
    requires_grad: bool,
}

/// Record of one forward pass.
pub struct Tape<T> {
    id: u64,
    nodes: Vec<Node<T>>,
    fault: Option<OpKind>,
}

impl<T: Scalar> Default for Tape<T> {
    fn default() -> Self {
        Self::new()
    }
}

/// Gradients produced by one backward sweep, indexed by [`Var`].
pub struct Gradients<T> {
    tape: u64,
    grads: Vec<Option<Tensor<T>>>,
}

impl<T: Scalar> Gradients<T> {
    pub fn get(&self, var: Var) -> Option<&Tensor<T>> {
        if var.tape != self.tape {
            return None;
        }
        self.grads.get(var.index).and_then(Option::as_ref)
    }

    /// Moves a gradient out; a tracked leaf the loss does not depend on gets
    /// zeros of `like`'s shape.
    pub fn take_or_zero(&mut self, var: Var, like: &Tensor<T>) -> Tensor<T> {
        if var.tape == self.tape {
            if let Some(g) = self.grads.get_mut(var.index).and_then(Option::take) {
                return g;
            }
        }
        Tensor::zeros_unchecked(like.shape())
    }
}

impl<T: Scalar> Tape<T> {
    pub fn new() -> Self {
        Self {
            id: NEXT_TAPE_ID.fetch_add(1, Ordering::Relaxed),
            nodes: Vec::new(),
            fault: None,
        }
    }

    /// Test hook: makes the backward rule of `kind` return a gradient scaled
    /// by 1.5 for its first input, so gradient checks can be shown to fail.
    #[doc(hidden)]
    pub fn corrupt_backward(&mut self, kind: OpKind) {
        self.fault = Some(kind);
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    fn node(&self, var: Var) -> Result<&Node<T>> {
        if var.tape != self.id {
            return Err(Error::Autodiff("variable belongs to a different tape".into()));
        }
        self.nodes
            .get(var.index)
            .ok_or_else(|| Error::Autodiff("variable not on tape".into()))
    }

    pub fn value(&self, var: Var) -> Result<&Tensor<T>> {
        Ok(&self.node(var)?.value)
    }

    /// Which ReLU inputs on the tape are positive, in recording order. Two
    /// passes with equal patterns lie on the same smooth piece.
    pub fn relu_pattern(&self) -> Vec<bool> {
        let mut out = Vec::new();
        for node in &self.nodes {
            if let Op::Relu(a) = node.op {
                out.extend(self.nodes[a.index].value.data().iter().map(|&v| v > T::zero()));
            }
        }
        out
    }

    pub fn requires_grad(&self, var: Var) -> Result<bool> {
        Ok(self.node(var)?.requires_grad)
    }

    fn push(&mut self, value: Tensor<T>, op: Op<T>, requires_grad: bool) -> Result<Var> {
        if !matches!(op, Op::Leaf) {
            value.ensure_finite(&format!("{:?}", op.kind()))?;
        }
        let index = self.nodes.len();
        self.nodes.push(Node {
            value,
            op,
            requires_grad,
        });
        Ok(Var { tape: self.id, index })
    }

    fn any_grad(&self, vars: &[Var]) -> bool {
        vars.iter().any(|&v| self.nodes[v.index].requires_grad)
    }

    /// A tracked leaf (parameter).
    pub fn param(&mut self, value: Tensor<T>) -> Var {
        self.push(value, Op::Leaf, true).expect("leaves are not checked")
    }

    /// An untracked leaf (input data, targets, noise).
    pub fn constant(&mut self, value: Tensor<T>) -> Var {
        self.push(value, Op::Leaf, false).expect("leaves are not checked")
    }

    pub fn add(&mut self, a: Var, b: Var) -> Result<Var> {
        let (va, vb) = (self.value(a)?, self.value(b)?);
        va.expect_same_shape(vb, "add")?;
        let data = va.data().iter().zip(vb.data()).map(|(&x, &y)| x + y).collect();
        let out = Tensor::from_parts(va.shape().to_vec(), data);
        let rg = self.any_grad(&[a, b]);
        self.push(out, Op::Add(a, b), rg)
    }

    /// Elementwise product.
    pub fn mul(&mut self, a: Var, b: Var) -> Result<Var> {
        let (va, vb) = (self.value(a)?, self.value(b)?);
        va.expect_same_shape(vb, "mul")?;
        let data = va.data().iter().zip(vb.data()).map(|(&x, &y)| x * y).collect();
        let out = Tensor::from_parts(va.shape().to_vec(), data);
        let rg = self.any_grad(&[a, b]);
        self.push(out, Op::Mul(a, b), rg)
    }

    pub fn scale(&mut self, a: Var, factor: T) -> Result<Var> {
        let out = self.value(a)?.map(|v| v * factor);
        let rg = self.any_grad(&[a]);
        self.push(out, Op::Scale(a, factor), rg)
    }

    pub fn exp(&mut self, a: Var) -> Result<Var> {
        let out = self.value(a)?.map(|v| v.exp());
        let rg = self.any_grad(&[a]);
        self.push(out, Op::Exp(a), rg)
    }

    pub fn sum(&mut self, a: Var) -> Result<Var> {
        let out = Tensor::scalar(self.value(a)?.sum());
        let rg = self.any_grad(&[a]);
        self.push(out, Op::Sum(a), rg)
    }

    pub fn mean(&mut self, a: Var) -> Result<Var> {
        let out = Tensor::scalar(self.value(a)?.mean());
        let rg = self.any_grad(&[a]);
        self.push(out, Op::Mean(a), rg)
    }

    pub fn reshape(&mut self, a: Var, shape: &[usize]) -> Result<Var> {
        let out = self.value(a)?.reshape(shape)?;
        let rg = self.any_grad(&[a]);
        self.push(out, Op::Reshape(a), rg)
    }

    pub fn relu(&mut self, a: Var) -> Result<Var> {
        let out = activation::relu(self.value(a)?);
        let rg = self.any_grad(&[a]);
        self.push(out, Op::Relu(a), rg)
    }

    pub fn sigmoid(&mut self, a: Var) -> Result<Var> {
        let out = activation::sigmoid(self.value(a)?);
        let rg = self.any_grad(&[a]);
        self.push(out, Op::Sigmoid(a), rg)
    }

    pub fn dense(&mut self, x: Var, w: Var, b: Var) -> Result<Var> {
        let out = dense::dense_forward(self.value(x)?, self.value(w)?, self.value(b)?)?;
        let rg = self.any_grad(&[x, w, b]);
        self.push(out, Op::Dense { x, w, b }, rg)
    }

    fn bias_or_zeros(&self, k: Var, b: Option<Var>) -> Result<Tensor<T>> {
        match b {
            Some(b) => Ok(self.value(b)?.clone()),
            None => {
                let cout = self.value(k)?.shape().last().copied().unwrap_or(0);
                Tensor::zeros(&[cout])
            }
        }
    }

    /// Convolution; `b = None` means no bias term.
    pub fn conv2d(&mut self, x: Var, k: Var, b: Option<Var>, stride: usize, padding: Padding) -> Result<Var> {
        let bias = self.bias_or_zeros(k, b)?;
        let out = conv::conv2d_forward(self.value(x)?, self.value(k)?, &bias, stride, padding)?;
        let rg = self.any_grad(&[x, k]) || b.is_some_and(|b| self.any_grad(&[b]));
        self.push(
            out,
            Op::Conv2d {
                x,
                k,
                b,
                stride,
                padding,
            },
            rg,
        )
    }

    /// Transposed convolution; `b = None` means no bias term.
    pub fn conv_transpose2d(&mut self, x: Var, k: Var, b: Option<Var>, stride: usize, padding: Padding) -> Result<Var> {
        let bias = self.bias_or_zeros(k, b)?;
        let out = conv::conv_transpose2d_forward(self.value(x)?, self.value(k)?, &bias, stride, padding)?;
        let rg = self.any_grad(&[x, k]) || b.is_some_and(|b| self.any_grad(&[b]));
        self.push(
            out,
            Op::ConvTranspose2d {
                x,
                k,
                b,
                stride,
                padding,
            },
            rg,
        )
    }

    /// Train-mode batch normalization. Returns the output and the batch
    /// `(mean, var)` so the caller can update running statistics.
    pub fn batchnorm_train(
        &mut self,
        x: Var,
        gamma: Var,
        beta: Var,
        epsilon: T,
    ) -> Result<(Var, Vec<T>, Vec<T>)> {
        let r = norm::batchnorm_train_forward(self.value(x)?, self.value(gamma)?, self.value(beta)?, epsilon)?;
        let rg = self.any_grad(&[x, gamma, beta]);
        let v = self.push(
            r.output,
            Op::BatchNorm {
                x,
                gamma,
                beta,
                normalized: r.normalized,
                inv_std: r.inv_std,
                batch_stats: true,
            },
            rg,
        )?;
        Ok((v, r.mean, r.var))
    }

    pub fn batchnorm_eval(
        &mut self,
        x: Var,
        gamma: Var,
        beta: Var,
        stats: &RunningStats<T>,
        epsilon: T,
    ) -> Result<Var> {
        let (normalized, output, inv_std) =
            norm::batchnorm_eval_forward(self.value(x)?, self.value(gamma)?, self.value(beta)?, stats, epsilon)?;
        let rg = self.any_grad(&[x, gamma, beta]);
        self.push(
            output,
            Op::BatchNorm {
                x,
                gamma,
                beta,
                normalized,
                inv_std,
                batch_stats: false,
            },
            rg,
        )
    }

    pub fn mse(&mut self, prediction: Var, target: Var) -> Result<Var> {
        let l = loss::mse(self.value(prediction)?, self.value(target)?)?;
        let rg = self.any_grad(&[prediction, target]);
        self.push(Tensor::scalar(l), Op::Mse { prediction, target }, rg)
    }

    pub fn gaussian_kl(&mut self, mu: Var, log_scale: Var) -> Result<Var> {
        let l = loss::gaussian_kl(self.value(mu)?, self.value(log_scale)?)?;
        let rg = self.any_grad(&[mu, log_scale]);
        self.push(Tensor::scalar(l), Op::GaussianKl { mu, log_scale }, rg)
    }

    /// Lays `[B*g*g, t, t, C]` tiles out as `[B, g*t, g*t, C]` images.
    pub fn assemble_tiles(&mut self, tiles: Var, grid_size: usize) -> Result<Var> {
        let out = grid::assemble_tiles(self.value(tiles)?, grid_size)?;
        let rg = self.any_grad(&[tiles]);
        self.push(
            out,
            Op::AssembleTiles {
                tiles,
                grid: grid_size,
            },
            rg,
        )
    }

    /// Gradient of the scalar `loss` with respect to every node that
    /// depends on a tracked leaf.
    pub fn backward(&self, loss: Var) -> Result<Gradients<T>> {
        let loss_node = self.node(loss)?;
        if !loss_node.value.is_scalar() {
            return Err(Error::Autodiff(format!(
                "backward needs a scalar loss, got shape {:?}",
                loss_node.value.shape()
            )));
        }
        let mut grads: Vec<Option<Tensor<T>>> = (0..self.nodes.len()).map(|_| None).collect();
        grads[loss.index] = Some(Tensor::from_parts(loss_node.value.shape().to_vec(), vec![T::one()]));

        for index in (0..=loss.index).rev() {
            let node = &self.nodes[index];
            if !node.requires_grad || matches!(node.op, Op::Leaf) {
                continue;
            }
            let Some(upstream) = grads[index].take() else { continue };
            let mut contributions = self.backward_rule(node, &upstream)?;
            if self.fault == Some(node.op.kind()) {
                if let Some((_, g)) = contributions.first_mut() {
                    *g = g.map(|v| v * lit(1.5));
                }
            }
            for (var, g) in contributions {
                if !self.nodes[var.index].requires_grad {
                    continue;
                }
                match &mut grads[var.index] {
                    Some(acc) => acc.add_assign(&g)?,
                    slot @ None => *slot = Some(g),
                }
            }
            // Non-leaf gradients are not kept; leaves retain theirs.
        }
        Ok(Gradients { tape: self.id, grads })
    }

    fn grad_wanted(&self, var: Var) -> bool {
        self.nodes[var.index].requires_grad
    }

    fn backward_rule(&self, node: &Node<T>, g: &Tensor<T>) -> Result<Vec<(Var, Tensor<T>)>> {
        let val = |v: Var| &self.nodes[v.index].value;
        Ok(match &node.op {
            Op::Leaf => Vec::new(),
            Op::Add(a, b) => vec![(*a, g.clone()), (*b, g.clone())],
            Op::Mul(a, b) => {
                let ga = zip_map(g, val(*b), |d, y| d * y);
                let gb = zip_map(g, val(*a), |d, x| d * x);
                vec![(*a, ga), (*b, gb)]
            }
            Op::Scale(a, f) => vec![(*a, g.map(|d| d * *f))],
            Op::Exp(a) => vec![(*a, zip_map(g, &node.value, |d, e| d * e))],
            Op::Sum(a) => {
                let d = g.data()[0];
                vec![(*a, Tensor::from_parts(val(*a).shape().to_vec(), vec![d; val(*a).len()]))]
            }
            Op::Mean(a) => {
                let d = g.data()[0] / lit::<T>(val(*a).len() as f64);
                vec![(*a, Tensor::from_parts(val(*a).shape().to_vec(), vec![d; val(*a).len()]))]
            }
            Op::Reshape(a) => vec![(*a, g.reshape(val(*a).shape())?)],
            Op::Relu(a) => vec![(*a, activation::relu_backward(val(*a), g))],
            Op::Sigmoid(a) => vec![(*a, activation::sigmoid_backward(&node.value, g))],
            Op::Dense { x, w, b } => {
                let (dx, dw, db) = dense::dense_backward(val(*x), val(*w), g, self.grad_wanted(*x));
                let mut out = Vec::with_capacity(3);
                if let Some(dx) = dx {
                    out.push((*x, dx));
                }
                out.push((*w, dw));
                out.push((*b, db));
                out
            }
            Op::Conv2d {
                x,
                k,
                b,
                stride,
                padding,
            } => {
                let (dx, dk, db) =
                    conv::conv2d_backward(val(*x), val(*k), g, *stride, *padding, self.grad_wanted(*x))?;
                let mut out = Vec::with_capacity(3);
                if let Some(dx) = dx {
                    out.push((*x, dx));
                }
                out.push((*k, dk));
                if let Some(b) = b {
                    out.push((*b, db));
                }
                out
            }
            Op::ConvTranspose2d {
                x,
                k,
                b,
                stride,
                padding,
            } => {
                let (dx, dk, db) =
                    conv::conv_transpose2d_backward(val(*x), val(*k), g, *stride, *padding, self.grad_wanted(*x))?;
                let mut out = Vec::with_capacity(3);
                if let Some(dx) = dx {
                    out.push((*x, dx));
                }
                out.push((*k, dk));
                if let Some(b) = b {
                    out.push((*b, db));
                }
                out
            }
            Op::BatchNorm {
                x,
                gamma,
                beta,
                normalized,
                inv_std,
                batch_stats,
            } => {
                let (dx, dg, db) = if *batch_stats {
                    norm::batchnorm_train_backward(g, normalized, val(*gamma), inv_std)
                } else {
                    norm::batchnorm_eval_backward(g, normalized, val(*gamma), inv_std)
                };
                vec![(*x, dx), (*gamma, dg), (*beta, db)]
            }
            Op::Mse { prediction, target } => {
                let dp = loss::mse_backward(val(*prediction), val(*target), g.data()[0]);
                let dt = dp.map(|v| -v);
                vec![(*prediction, dp), (*target, dt)]
            }
            Op::GaussianKl { mu, log_scale } => {
                let (dm, ds) = loss::gaussian_kl_backward(val(*mu), val(*log_scale), g.data()[0]);
                vec![(*mu, dm), (*log_scale, ds)]
            }
            Op::AssembleTiles { tiles, grid: gsz } => vec![(*tiles, grid::split_tiles(g, *gsz)?)],
        })
    }
}

fn zip_map<T: Scalar>(a: &Tensor<T>, b: &Tensor<T>, f: impl Fn(T, T) -> T) -> Tensor<T> {
    let d = a.data().iter().zip(b.data()).map(|(&x, &y)| f(x, y)).collect();
    Tensor::from_parts(a.shape().to_vec(), d)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn t(v: &[f64]) -> Tensor<f64> {
        Tensor::from_slice(&[v.len()], v).unwrap()
    }

    #[test]
    fn grad_of_sum_is_ones() {
        let mut tape = Tape::new();
        let x = tape.param(t(&[1.0, -2.0, 3.0]));
        let l = tape.sum(x).unwrap();
        let g = tape.backward(l).unwrap();
        assert_eq!(g.get(x).unwrap().data(), &[1.0, 1.0, 1.0]);
    }

    #[test]
    fn fan_out_accumulates() {
        let mut tape = Tape::new();
        let x = tape.param(t(&[2.0, -3.0]));
        let sq = tape.mul(x, x).unwrap();
        let l = tape.sum(sq).unwrap();
        let g = tape.backward(l).unwrap();
        assert_eq!(g.get(x).unwrap().data(), &[4.0, -6.0]);
    }

    #[test]
    fn non_scalar_loss_rejected() {
        let mut tape = Tape::new();
        let x = tape.param(t(&[1.0, 2.0]));
        assert!(matches!(tape.backward(x), Err(Error::Autodiff(_))));
    }

    #[test]
    fn foreign_variable_rejected() {
        let mut a = Tape::<f64>::new();
        let b = Tape::<f64>::new();
        let x = a.param(t(&[1.0]));
        assert!(b.backward(x).is_err());
        assert!(b.value(x).is_err());
    }

    #[test]
    fn non_finite_op_output_is_an_error() {
        let mut tape = Tape::new();
        let x = tape.param(t(&[1000.0]));
        let err = tape.exp(x).unwrap_err();
        assert!(matches!(err, Error::NonFinite(_)));
    }

    #[test]
    fn constants_get_no_gradient() {
        let mut tape = Tape::new();
        let x = tape.param(t(&[1.0, 2.0]));
        let c = tape.constant(t(&[3.0, 4.0]));
        let p = tape.mul(x, c).unwrap();
        let l = tape.sum(p).unwrap();
        let g = tape.backward(l).unwrap();
        assert_eq!(g.get(x).unwrap().data(), &[3.0, 4.0]);
        assert!(g.get(c).is_none());
    }

    #[test]
    fn linearity_of_backward() {
        // grad(a*f + b*g) == a*grad f + b*grad g with f = sum(x*x), g = sum(exp(x)).
        let xv = t(&[0.3, -1.2, 2.0]);
        let (a, b) = (2.5, -0.75);
        let grad_of = |wa: f64, wb: f64| {
            let mut tape = Tape::new();
            let x = tape.param(xv.clone());
            let sq = tape.mul(x, x).unwrap();
            let f = tape.sum(sq).unwrap();
            let e = tape.exp(x).unwrap();
            let gg = tape.sum(e).unwrap();
            let fa = tape.scale(f, wa).unwrap();
            let gb = tape.scale(gg, wb).unwrap();
            let l = tape.add(fa, gb).unwrap();
            tape.backward(l).unwrap().get(x).unwrap().clone()
        };
        let combined = grad_of(a, b);
        let gf = grad_of(1.0, 0.0);
        let gg = grad_of(0.0, 1.0);
        for i in 0..3 {
            let expect = a * gf.data()[i] + b * gg.data()[i];
            assert!((combined.data()[i] - expect).abs() < 1e-12);
        }
    }

    #[test]
    fn corrupted_rule_changes_gradient() {
        let mut tape = Tape::new();
        tape.corrupt_backward(OpKind::Sum);
        let x = tape.param(t(&[1.0]));
        let l = tape.sum(x).unwrap();
        let g = tape.backward(l).unwrap();
        assert_eq!(g.get(x).unwrap().data(), &[1.5]);
    }
}
