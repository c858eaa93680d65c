//! Naive nested-loop references for the layer kernels.

use vgsn_core::nn::conv::{conv2d_forward, conv_transpose2d_forward};
use vgsn_core::nn::dense::dense_forward;
use vgsn_core::nn::loss::mse;
use vgsn_core::nn::Padding;
use vgsn_core::{Rng, Tensor};

use super::{range, rel_err, uniform};

fn leading_pad(input: usize, k: usize, s: usize, padding: Padding) -> (usize, usize) {
    match padding {
        Padding::Valid => ((input - k) / s + 1, 0),
        Padding::Same => {
            let out = input.div_ceil(s);
            let need = ((out - 1) * s + k).saturating_sub(input);
            (out, need / 2)
        }
    }
}

pub fn naive_conv2d(x: &Tensor<f64>, k: &Tensor<f64>, bias: &[f64], s: usize, padding: Padding) -> Vec<f64> {
    let [b, h, w, ci] = x.shape().try_into().unwrap();
    let [kh, kw, _, co] = k.shape().try_into().unwrap();
    let (oh, pt) = leading_pad(h, kh, s, padding);
    let (ow, pl) = leading_pad(w, kw, s, padding);
    let mut y = vec![0.0; b * oh * ow * co];
    for n in 0..b {
        for oy in 0..oh {
            for ox in 0..ow {
                for o in 0..co {
                    let mut acc = bias[o];
                    for ky in 0..kh {
                        for kx in 0..kw {
                            let iy = (oy * s + ky) as isize - pt as isize;
                            let ix = (ox * s + kx) as isize - pl as isize;
                            if iy < 0 || ix < 0 || iy >= h as isize || ix >= w as isize {
                                continue;
                            }
                            for c in 0..ci {
                                acc += x.get(&[n, iy as usize, ix as usize, c]).unwrap() * k.get(&[ky, kx, c, o]).unwrap();
                            }
                        }
                    }
                    y[((n * oh + oy) * ow + ox) * co + o] = acc;
                }
            }
        }
    }
    y
}

/// Scatter-add: every input pixel stamps the kernel at `stride * position`,
/// then the leading crop of `Same` padding is removed.
pub fn naive_conv_transpose2d(x: &Tensor<f64>, k: &Tensor<f64>, bias: &[f64], s: usize, padding: Padding) -> Vec<f64> {
    let [b, h, w, ci] = x.shape().try_into().unwrap();
    let [kh, kw, _, co] = k.shape().try_into().unwrap();
    let (oh, ow, ct, cl) = match padding {
        Padding::Valid => ((h - 1) * s + kh, (w - 1) * s + kw, 0, 0),
        Padding::Same => (h * s, w * s, kh.saturating_sub(s) / 2, kw.saturating_sub(s) / 2),
    };
    let mut y = vec![0.0; b * oh * ow * co];
    for n in 0..b {
        for iy in 0..h {
            for ix in 0..w {
                for ky in 0..kh {
                    for kx in 0..kw {
                        let oy = (iy * s + ky) as isize - ct as isize;
                        let ox = (ix * s + kx) as isize - cl as isize;
                        if oy < 0 || ox < 0 || oy >= oh as isize || ox >= ow as isize {
                            continue;
                        }
                        for c in 0..ci {
                            for o in 0..co {
                                y[((n * oh + oy as usize) * ow + ox as usize) * co + o] +=
                                    x.get(&[n, iy, ix, c]).unwrap() * k.get(&[ky, kx, c, o]).unwrap();
                            }
                        }
                    }
                }
            }
        }
    }
    for px in y.chunks_mut(co) {
        for (v, b) in px.iter_mut().zip(bias) {
            *v += b;
        }
    }
    y
}

pub fn padding(rng: &mut Rng) -> Padding {
    if rng.uniform() < 0.5 {
        Padding::Valid
    } else {
        Padding::Same
    }
}

/// Largest relative error of each kernel over `n` random geometries.
pub fn conv2d_sweep(seed: u64, n: usize) -> f64 {
    let mut rng = Rng::new(seed);
    let mut worst = 0.0f64;
    for _ in 0..n {
        let (kh, kw) = (range(&mut rng, 1, 4), range(&mut rng, 1, 4));
        let (h, w) = (range(&mut rng, kh, 9), range(&mut rng, kw, 9));
        let (b, ci, co, s) = (range(&mut rng, 1, 3), range(&mut rng, 1, 4), range(&mut rng, 1, 4), range(&mut rng, 1, 3));
        let pad = padding(&mut rng);
        let x = uniform(&mut rng, &[b, h, w, ci], -1.0, 1.0);
        let k = uniform(&mut rng, &[kh, kw, ci, co], -1.0, 1.0);
        let bias = uniform(&mut rng, &[co], -1.0, 1.0);
        let got = conv2d_forward(&x, &k, &bias, s, pad).unwrap();
        worst = worst.max(rel_err(got.data(), &naive_conv2d(&x, &k, bias.data(), s, pad)));
    }
    worst
}

pub fn conv_transpose2d_sweep(seed: u64, n: usize) -> f64 {
    let mut rng = Rng::new(seed);
    let mut worst = 0.0f64;
    for _ in 0..n {
        let (kh, kw) = (range(&mut rng, 1, 4), range(&mut rng, 1, 4));
        let (h, w) = (range(&mut rng, 1, 7), range(&mut rng, 1, 7));
        let (b, ci, co, s) = (range(&mut rng, 1, 3), range(&mut rng, 1, 4), range(&mut rng, 1, 4), range(&mut rng, 1, 3));
        let pad = padding(&mut rng);
        let x = uniform(&mut rng, &[b, h, w, ci], -1.0, 1.0);
        let k = uniform(&mut rng, &[kh, kw, ci, co], -1.0, 1.0);
        let bias = uniform(&mut rng, &[co], -1.0, 1.0);
        let got = conv_transpose2d_forward(&x, &k, &bias, s, pad).unwrap();
        worst = worst.max(rel_err(got.data(), &naive_conv_transpose2d(&x, &k, bias.data(), s, pad)));
    }
    worst
}

pub fn dense_sweep(seed: u64, n: usize) -> f64 {
    let mut rng = Rng::new(seed);
    let mut worst = 0.0f64;
    for _ in 0..n {
        let (b, fin, fout) = (range(&mut rng, 1, 5), range(&mut rng, 1, 20), range(&mut rng, 1, 20));
        let x = uniform(&mut rng, &[b, fin], -1.0, 1.0);
        let w = uniform(&mut rng, &[fin, fout], -1.0, 1.0);
        let bias = uniform(&mut rng, &[fout], -1.0, 1.0);
        let got = dense_forward(&x, &w, &bias).unwrap();
        let mut want = vec![0.0; b * fout];
        for r in 0..b {
            for o in 0..fout {
                want[r * fout + o] = bias.data()[o] + (0..fin).map(|i| x.get(&[r, i]).unwrap() * w.get(&[i, o]).unwrap()).sum::<f64>();
            }
        }
        worst = worst.max(rel_err(got.data(), &want));
    }
    worst
}

pub fn mse_sweep(seed: u64, n: usize) -> f64 {
    let mut rng = Rng::new(seed);
    let mut worst = 0.0f64;
    for _ in 0..n {
        let shape = [range(&mut rng, 1, 4), range(&mut rng, 1, 6), range(&mut rng, 1, 6), range(&mut rng, 1, 3)];
        let p = uniform(&mut rng, &shape, 0.0, 1.0);
        let t = uniform(&mut rng, &shape, 0.0, 1.0);
        let want: f64 = p.data().iter().zip(t.data()).map(|(a, b)| (a - b) * (a - b)).sum::<f64>() / p.len() as f64;
        worst = worst.max((mse(&p, &t).unwrap() - want).abs() / want.abs().max(1e-300));
    }
    worst
}
