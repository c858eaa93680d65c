//! Strided 2-D convolution and transposed convolution over `[B, H, W, C]`
//! tensors with `[kh, kw, Cin, Cout]` kernels.
//!
//! Convolution is cross-correlation (no kernel flip). With `Same` padding an
//! odd total pad puts the extra row/column at the bottom/right. The
//! transposed convolution is the exact adjoint of `conv2d` with the channel
//! axes of the kernel swapped, so `Same` transposed convolution with stride
//! `s` maps `H` to `H * s`.

use crate::error::{Error, Result};
use crate::tensor::{Scalar, Tensor};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Padding {
    Valid,
    Same,
}

/// Output extent and leading pad of one spatial axis of `conv2d`.
pub fn conv_out_extent(input: usize, kernel: usize, stride: usize, padding: Padding) -> Result<(usize, usize)> {
    if stride == 0 || kernel == 0 {
        return Err(Error::Shape("stride and kernel extent must be positive".into()));
    }
    match padding {
        Padding::Valid => {
            if input < kernel {
                return Err(Error::Shape(format!(
                    "valid convolution of extent {input} with kernel {kernel} is empty"
                )));
            }
            Ok(((input - kernel) / stride + 1, 0))
        }
        Padding::Same => {
            let out = input.div_ceil(stride);
            let total = ((out - 1) * stride + kernel).saturating_sub(input);
            Ok((out, total / 2))
        }
    }
}

/// Output extent and leading crop of one spatial axis of `conv_transpose2d`.
pub fn conv_transpose_out_extent(input: usize, kernel: usize, stride: usize, padding: Padding) -> Result<(usize, usize)> {
    if stride == 0 || kernel == 0 {
        return Err(Error::Shape("stride and kernel extent must be positive".into()));
    }
    match padding {
        Padding::Valid => Ok(((input - 1) * stride + kernel, 0)),
        Padding::Same => Ok((input * stride, kernel.saturating_sub(stride) / 2)),
    }
}

struct Geometry {
    batch: usize,
    in_h: usize,
    in_w: usize,
    cin: usize,
    kh: usize,
    kw: usize,
    cout: usize,
    out_h: usize,
    out_w: usize,
    pad_top: usize,
    pad_left: usize,
    stride: usize,
}

impl Geometry {
    /// Maps an output coordinate plus kernel tap to the input coordinate
    /// (forward conv).
    #[inline]
    fn src(o: usize, k: usize, stride: usize, pad: usize, extent: usize) -> Option<usize> {
        let p = (o * stride + k).checked_sub(pad)?;
        (p < extent).then_some(p)
    }
}

fn check_operands<T: Scalar>(x: &Tensor<T>, kernel: &Tensor<T>, bias: &Tensor<T>, what: &str) -> Result<()> {
    if x.rank() != 4 {
        return Err(Error::Shape(format!("{what}: input must be [B,H,W,C], got {:?}", x.shape())));
    }
    if kernel.rank() != 4 {
        return Err(Error::Shape(format!(
            "{what}: kernel must be [kh,kw,Cin,Cout], got {:?}",
            kernel.shape()
        )));
    }
    if x.shape()[3] != kernel.shape()[2] {
        return Err(Error::Shape(format!(
            "{what}: input has {} channels but kernel expects {}",
            x.shape()[3],
            kernel.shape()[2]
        )));
    }
    if bias.shape() != [kernel.shape()[3]] {
        return Err(Error::Shape(format!(
            "{what}: bias shape {:?} does not match {} output channels",
            bias.shape(),
            kernel.shape()[3]
        )));
    }
    Ok(())
}

fn conv_geometry<T: Scalar>(x: &Tensor<T>, kernel: &Tensor<T>, stride: usize, padding: Padding) -> Result<Geometry> {
    let (batch, in_h, in_w, cin) = (x.shape()[0], x.shape()[1], x.shape()[2], x.shape()[3]);
    let (kh, kw, cout) = (kernel.shape()[0], kernel.shape()[1], kernel.shape()[3]);
    let (out_h, pad_top) = conv_out_extent(in_h, kh, stride, padding)?;
    let (out_w, pad_left) = conv_out_extent(in_w, kw, stride, padding)?;
    Ok(Geometry {
        batch,
        in_h,
        in_w,
        cin,
        kh,
        kw,
        cout,
        out_h,
        out_w,
        pad_top,
        pad_left,
        stride,
    })
}

fn transpose_geometry<T: Scalar>(x: &Tensor<T>, kernel: &Tensor<T>, stride: usize, padding: Padding) -> Result<Geometry> {
    let (batch, in_h, in_w, cin) = (x.shape()[0], x.shape()[1], x.shape()[2], x.shape()[3]);
    let (kh, kw, cout) = (kernel.shape()[0], kernel.shape()[1], kernel.shape()[3]);
    let (out_h, pad_top) = conv_transpose_out_extent(in_h, kh, stride, padding)?;
    let (out_w, pad_left) = conv_transpose_out_extent(in_w, kw, stride, padding)?;
    Ok(Geometry {
        batch,
        in_h,
        in_w,
        cin,
        kh,
        kw,
        cout,
        out_h,
        out_w,
        pad_top,
        pad_left,
        stride,
    })
}

#[inline]
fn axpy<T: Scalar>(out: &mut [T], a: T, x: &[T]) {
    for (o, &v) in out.iter_mut().zip(x) {
        *o += a * v;
    }
}

#[inline]
fn dot<T: Scalar>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).fold(T::zero(), |acc, (&x, &y)| acc + x * y)
}

pub fn conv2d_forward<T: Scalar>(
    x: &Tensor<T>,
    kernel: &Tensor<T>,
    bias: &Tensor<T>,
    stride: usize,
    padding: Padding,
) -> Result<Tensor<T>> {
    check_operands(x, kernel, bias, "conv2d")?;
    let g = conv_geometry(x, kernel, stride, padding)?;
    let (xd, kd, bd) = (x.data(), kernel.data(), bias.data());
    let mut y = vec![T::zero(); g.batch * g.out_h * g.out_w * g.cout];
    for b in 0..g.batch {
        for oy in 0..g.out_h {
            for ox in 0..g.out_w {
                let o_off = ((b * g.out_h + oy) * g.out_w + ox) * g.cout;
                let out = &mut y[o_off..o_off + g.cout];
                out.copy_from_slice(bd);
                for ky in 0..g.kh {
                    let Some(iy) = Geometry::src(oy, ky, g.stride, g.pad_top, g.in_h) else { continue };
                    for kx in 0..g.kw {
                        let Some(ix) = Geometry::src(ox, kx, g.stride, g.pad_left, g.in_w) else { continue };
                        let x_off = ((b * g.in_h + iy) * g.in_w + ix) * g.cin;
                        let k_off = (ky * g.kw + kx) * g.cin * g.cout;
                        for ci in 0..g.cin {
                            let xv = xd[x_off + ci];
                            if xv != T::zero() {
                                let row = &kd[k_off + ci * g.cout..k_off + (ci + 1) * g.cout];
                                axpy(out, xv, row);
                            }
                        }
                    }
                }
            }
        }
    }
    Ok(Tensor::from_parts(vec![g.batch, g.out_h, g.out_w, g.cout], y))
}

/// Input gradient (if requested), kernel gradient and bias gradient.
pub type ConvGrads<T> = (Option<Tensor<T>>, Tensor<T>, Tensor<T>);

/// Gradients of `conv2d` with respect to input (when `need_input`), kernel
/// and bias.
pub fn conv2d_backward<T: Scalar>(
    x: &Tensor<T>,
    kernel: &Tensor<T>,
    grad_out: &Tensor<T>,
    stride: usize,
    padding: Padding,
    need_input: bool,
) -> Result<ConvGrads<T>> {
    let g = conv_geometry(x, kernel, stride, padding)?;
    if grad_out.shape() != [g.batch, g.out_h, g.out_w, g.cout] {
        return Err(Error::Shape("conv2d backward: gradient shape mismatch".into()));
    }
    let (xd, kd, dyd) = (x.data(), kernel.data(), grad_out.data());
    let mut dx = need_input.then(|| vec![T::zero(); xd.len()]);
    let mut dk = vec![T::zero(); kd.len()];
    let mut db = vec![T::zero(); g.cout];
    for b in 0..g.batch {
        for oy in 0..g.out_h {
            for ox in 0..g.out_w {
                let o_off = ((b * g.out_h + oy) * g.out_w + ox) * g.cout;
                let dy = &dyd[o_off..o_off + g.cout];
                axpy(&mut db, T::one(), dy);
                for ky in 0..g.kh {
                    let Some(iy) = Geometry::src(oy, ky, g.stride, g.pad_top, g.in_h) else { continue };
                    for kx in 0..g.kw {
                        let Some(ix) = Geometry::src(ox, kx, g.stride, g.pad_left, g.in_w) else { continue };
                        let x_off = ((b * g.in_h + iy) * g.in_w + ix) * g.cin;
                        let k_off = (ky * g.kw + kx) * g.cin * g.cout;
                        for ci in 0..g.cin {
                            let row = k_off + ci * g.cout..k_off + (ci + 1) * g.cout;
                            let xv = xd[x_off + ci];
                            if xv != T::zero() {
                                axpy(&mut dk[row.clone()], xv, dy);
                            }
                            if let Some(dx) = dx.as_mut() {
                                dx[x_off + ci] += dot(&kd[row], dy);
                            }
                        }
                    }
                }
            }
        }
    }
    Ok((
        dx.map(|d| Tensor::from_parts(x.shape().to_vec(), d)),
        Tensor::from_parts(kernel.shape().to_vec(), dk),
        Tensor::from_parts(vec![g.cout], db),
    ))
}

pub fn conv_transpose2d_forward<T: Scalar>(
    x: &Tensor<T>,
    kernel: &Tensor<T>,
    bias: &Tensor<T>,
    stride: usize,
    padding: Padding,
) -> Result<Tensor<T>> {
    check_operands(x, kernel, bias, "conv_transpose2d")?;
    let g = transpose_geometry(x, kernel, stride, padding)?;
    let (xd, kd, bd) = (x.data(), kernel.data(), bias.data());
    let mut y = Vec::with_capacity(g.batch * g.out_h * g.out_w * g.cout);
    for _ in 0..g.batch * g.out_h * g.out_w {
        y.extend_from_slice(bd);
    }
    for b in 0..g.batch {
        for iy in 0..g.in_h {
            for ix in 0..g.in_w {
                let x_off = ((b * g.in_h + iy) * g.in_w + ix) * g.cin;
                for ky in 0..g.kh {
                    let Some(oy) = Geometry::src(iy, ky, g.stride, g.pad_top, g.out_h) else { continue };
                    for kx in 0..g.kw {
                        let Some(ox) = Geometry::src(ix, kx, g.stride, g.pad_left, g.out_w) else { continue };
                        let o_off = ((b * g.out_h + oy) * g.out_w + ox) * g.cout;
                        let k_off = (ky * g.kw + kx) * g.cin * g.cout;
                        for ci in 0..g.cin {
                            let xv = xd[x_off + ci];
                            if xv != T::zero() {
                                let row = &kd[k_off + ci * g.cout..k_off + (ci + 1) * g.cout];
                                axpy(&mut y[o_off..o_off + g.cout], xv, row);
                            }
                        }
                    }
                }
            }
        }
    }
    Ok(Tensor::from_parts(vec![g.batch, g.out_h, g.out_w, g.cout], y))
}

pub fn conv_transpose2d_backward<T: Scalar>(
    x: &Tensor<T>,
    kernel: &Tensor<T>,
    grad_out: &Tensor<T>,
    stride: usize,
    padding: Padding,
    need_input: bool,
) -> Result<ConvGrads<T>> {
    let g = transpose_geometry(x, kernel, stride, padding)?;
    if grad_out.shape() != [g.batch, g.out_h, g.out_w, g.cout] {
        return Err(Error::Shape("conv_transpose2d backward: gradient shape mismatch".into()));
    }
    let (xd, kd, dyd) = (x.data(), kernel.data(), grad_out.data());
    let mut dx = need_input.then(|| vec![T::zero(); xd.len()]);
    let mut dk = vec![T::zero(); kd.len()];
    let mut db = vec![T::zero(); g.cout];
    for px in dyd.chunks_exact(g.cout) {
        axpy(&mut db, T::one(), px);
    }
    for b in 0..g.batch {
        for iy in 0..g.in_h {
            for ix in 0..g.in_w {
                let x_off = ((b * g.in_h + iy) * g.in_w + ix) * g.cin;
                for ky in 0..g.kh {
                    let Some(oy) = Geometry::src(iy, ky, g.stride, g.pad_top, g.out_h) else { continue };
                    for kx in 0..g.kw {
                        let Some(ox) = Geometry::src(ix, kx, g.stride, g.pad_left, g.out_w) else { continue };
                        let o_off = ((b * g.out_h + oy) * g.out_w + ox) * g.cout;
                        let dy = &dyd[o_off..o_off + g.cout];
                        let k_off = (ky * g.kw + kx) * g.cin * g.cout;
                        for ci in 0..g.cin {
                            let row = k_off + ci * g.cout..k_off + (ci + 1) * g.cout;
                            let xv = xd[x_off + ci];
                            if xv != T::zero() {
                                axpy(&mut dk[row.clone()], xv, dy);
                            }
                            if let Some(dx) = dx.as_mut() {
                                dx[x_off + ci] += dot(&kd[row], dy);
                            }
                        }
                    }
                }
            }
        }
    }
    Ok((
        dx.map(|d| Tensor::from_parts(x.shape().to_vec(), d)),
        Tensor::from_parts(kernel.shape().to_vec(), dk),
        Tensor::from_parts(vec![g.cout], db),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn t(shape: &[usize], v: &[f64]) -> Tensor<f64> {
        Tensor::from_slice(shape, v).unwrap()
    }

    #[test]
    fn ones_kernel_valid() {
        let x = Tensor::<f32>::full(&[1, 3, 3, 1], 1.0).unwrap();
        let k = Tensor::<f32>::full(&[2, 2, 1, 1], 1.0).unwrap();
        let b = Tensor::<f32>::zeros(&[1]).unwrap();
        let y = conv2d_forward(&x, &k, &b, 1, Padding::Valid).unwrap();
        assert_eq!(y.shape(), &[1, 2, 2, 1]);
        assert!(y.data().iter().all(|&v| v == 4.0));
    }

    #[test]
    fn identity_kernel() {
        let x = t(&[1, 2, 3, 1], &[1.0, -2.0, 3.5, 0.0, 7.0, -1.0]);
        let k = t(&[1, 1, 1, 1], &[1.0]);
        let b = t(&[1], &[0.0]);
        assert_eq!(conv2d_forward(&x, &k, &b, 1, Padding::Same).unwrap(), x);
        assert_eq!(conv_transpose2d_forward(&x, &k, &b, 1, Padding::Same).unwrap(), x);
    }

    #[test]
    fn transpose_single_tap() {
        let x = t(&[1, 1, 1, 1], &[2.0]);
        let k = t(&[2, 2, 1, 1], &[1.0, 2.0, 3.0, 4.0]);
        let b = t(&[1], &[0.0]);
        let y = conv_transpose2d_forward(&x, &k, &b, 2, Padding::Same).unwrap();
        assert_eq!(y.shape(), &[1, 2, 2, 1]);
        assert_eq!(y.data(), &[2.0, 4.0, 6.0, 8.0]);
    }

    #[test]
    fn channel_mismatch() {
        let x = Tensor::<f32>::zeros(&[1, 4, 4, 2]).unwrap();
        let k = Tensor::<f32>::zeros(&[3, 3, 3, 1]).unwrap();
        let b = Tensor::<f32>::zeros(&[1]).unwrap();
        assert!(matches!(conv2d_forward(&x, &k, &b, 1, Padding::Same), Err(Error::Shape(_))));
        assert!(conv_transpose2d_forward(&x, &k, &b, 2, Padding::Same).is_err());
    }

    #[test]
    fn valid_output_too_small() {
        let x = Tensor::<f32>::zeros(&[1, 2, 2, 1]).unwrap();
        let k = Tensor::<f32>::zeros(&[3, 3, 1, 1]).unwrap();
        let b = Tensor::<f32>::zeros(&[1]).unwrap();
        assert!(conv2d_forward(&x, &k, &b, 1, Padding::Valid).is_err());
    }

    #[test]
    fn same_padding_extents() {
        for h in 1..=16 {
            for s in 1..=2 {
                for k in 1..=4 {
                    assert_eq!(conv_out_extent(h, k, s, Padding::Same).unwrap().0, h.div_ceil(s));
                    assert_eq!(conv_transpose_out_extent(h, k, s, Padding::Same).unwrap().0, h * s);
                }
            }
        }
    }

    #[test]
    fn asymmetric_same_pad_goes_bottom_right() {
        // 4 wide, kernel 2, stride 1: total pad 1, all of it after.
        assert_eq!(conv_out_extent(4, 2, 1, Padding::Same).unwrap(), (4, 0));
        // kernel 3, stride 2 on 4: out 2, total pad 1 -> top 0.
        assert_eq!(conv_out_extent(4, 3, 2, Padding::Same).unwrap(), (2, 0));
        assert_eq!(conv_out_extent(5, 3, 1, Padding::Same).unwrap(), (5, 1));
    }
}
