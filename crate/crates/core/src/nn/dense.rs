//! Fully connected layer: `[B, in] x [in, out] + [out]`.

use crate::error::{Error, Result};
use crate::tensor::{Scalar, Tensor};

pub fn dense_forward<T: Scalar>(x: &Tensor<T>, weight: &Tensor<T>, bias: &Tensor<T>) -> Result<Tensor<T>> {
    if x.rank() != 2 || weight.rank() != 2 || x.shape()[1] != weight.shape()[0] {
        return Err(Error::Shape(format!(
            "dense: input {:?} incompatible with weight {:?}",
            x.shape(),
            weight.shape()
        )));
    }
    let (batch, fan_in, fan_out) = (x.shape()[0], weight.shape()[0], weight.shape()[1]);
    if bias.shape() != [fan_out] {
        return Err(Error::Shape(format!(
            "dense: bias {:?} does not match {fan_out} outputs",
            bias.shape()
        )));
    }
    let w = weight.data();
    let mut y = Vec::with_capacity(batch * fan_out);
    for row in x.data().chunks_exact(fan_in) {
        let start = y.len();
        y.extend_from_slice(bias.data());
        let out = &mut y[start..];
        for (i, &xv) in row.iter().enumerate() {
            if xv != T::zero() {
                for (o, &wv) in out.iter_mut().zip(&w[i * fan_out..(i + 1) * fan_out]) {
                    *o += xv * wv;
                }
            }
        }
    }
    Ok(Tensor::from_parts(vec![batch, fan_out], y))
}

/// `(dx, dweight, dbias)`; `dx` only when `need_input`.
pub fn dense_backward<T: Scalar>(
    x: &Tensor<T>,
    weight: &Tensor<T>,
    grad_out: &Tensor<T>,
    need_input: bool,
) -> (Option<Tensor<T>>, Tensor<T>, Tensor<T>) {
    let (fan_in, fan_out) = (weight.shape()[0], weight.shape()[1]);
    let w = weight.data();
    let mut dw = vec![T::zero(); w.len()];
    let mut db = vec![T::zero(); fan_out];
    let mut dx = need_input.then(|| Vec::with_capacity(x.len()));
    for (row, dy) in x.data().chunks_exact(fan_in).zip(grad_out.data().chunks_exact(fan_out)) {
        for (b, &g) in db.iter_mut().zip(dy) {
            *b += g;
        }
        for (i, &xv) in row.iter().enumerate() {
            let wrow = &w[i * fan_out..(i + 1) * fan_out];
            if xv != T::zero() {
                for (d, &g) in dw[i * fan_out..(i + 1) * fan_out].iter_mut().zip(dy) {
                    *d += xv * g;
                }
            }
            if let Some(dx) = dx.as_mut() {
                dx.push(wrow.iter().zip(dy).fold(T::zero(), |acc, (&a, &b)| acc + a * b));
            }
        }
    }
    (
        dx.map(|d| Tensor::from_parts(x.shape().to_vec(), d)),
        Tensor::from_parts(weight.shape().to_vec(), dw),
        Tensor::from_parts(vec![fan_out], db),
    )
}
