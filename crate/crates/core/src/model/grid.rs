//! Tile layout between `[B, g, g, t, t, C]` partitions and `[B, g*t, g*t, C]`
//! images. Partition `(i, j)` covers rows `i*t..(i+1)*t` and columns
//! `j*t..(j+1)*t`; partitions are ordered row-major.

use crate::error::{Error, Result};
use crate::tensor::{Scalar, Tensor};

pub fn assemble_tiles<T: Scalar>(tiles: &Tensor<T>, g: usize) -> Result<Tensor<T>> {
    let s = tiles.shape();
    if s.len() != 6 || s[1] != g || s[2] != g || s[3] != s[4] {
        return Err(Error::Shape(format!(
            "assemble: expected [B,{g},{g},t,t,C] tiles, got {s:?}"
        )));
    }
    let (batch, t, c) = (s[0], s[3], s[5]);
    let side = g * t;
    let src = tiles.data();
    let mut out = vec![T::zero(); src.len()];
    let row = t * c;
    for b in 0..batch {
        for gi in 0..g {
            for gj in 0..g {
                for y in 0..t {
                    let from = ((((b * g + gi) * g + gj) * t + y) * t) * c;
                    let to = ((b * side + gi * t + y) * side + gj * t) * c;
                    out[to..to + row].copy_from_slice(&src[from..from + row]);
                }
            }
        }
    }
    Ok(Tensor::from_parts(vec![batch, side, side, c], out))
}

pub fn split_tiles<T: Scalar>(image: &Tensor<T>, g: usize) -> Result<Tensor<T>> {
    let s = image.shape();
    if s.len() != 4 || g == 0 || s[1] != s[2] || !s[1].is_multiple_of(g) {
        return Err(Error::Shape(format!(
            "split: image {s:?} cannot be cut into a {g}x{g} grid"
        )));
    }
    let (batch, side, c) = (s[0], s[1], s[3]);
    let t = side / g;
    let src = image.data();
    let mut out = vec![T::zero(); src.len()];
    let row = t * c;
    for b in 0..batch {
        for gi in 0..g {
            for gj in 0..g {
                for y in 0..t {
                    let to = ((((b * g + gi) * g + gj) * t + y) * t) * c;
                    let from = ((b * side + gi * t + y) * side + gj * t) * c;
                    out[to..to + row].copy_from_slice(&src[from..from + row]);
                }
            }
        }
    }
    Ok(Tensor::from_parts(vec![batch, g, g, t, t, c], out))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tile_positions() {
        // 1 image, 2x2 grid of 1x1 single-channel tiles.
        let tiles = Tensor::<f32>::from_slice(&[1, 2, 2, 1, 1, 1], &[1.0, 2.0, 3.0, 4.0]).unwrap();
        let img = assemble_tiles(&tiles, 2).unwrap();
        assert_eq!(img.shape(), &[1, 2, 2, 1]);
        assert_eq!(img.data(), &[1.0, 2.0, 3.0, 4.0]);

        // 2x2 grid of 2x2 tiles, each tile constant = its index.
        let mut v = Vec::new();
        for k in 0..4 {
            v.extend(std::iter::repeat_n(k as f32, 4));
        }
        let tiles = Tensor::from_vec(&[1, 2, 2, 2, 2, 1], v).unwrap();
        let img = assemble_tiles(&tiles, 2).unwrap();
        assert_eq!(img.get(&[0, 0, 3, 0]).unwrap(), 1.0);
        assert_eq!(img.get(&[0, 3, 0, 0]).unwrap(), 2.0);
        assert_eq!(img.get(&[0, 2, 2, 0]).unwrap(), 3.0);
    }

    #[test]
    fn split_rejects_indivisible() {
        let img = Tensor::<f32>::zeros(&[1, 6, 6, 1]).unwrap();
        assert!(split_tiles(&img, 4).is_err());
    }
}
