//! Property tests over random shapes and contents.

use proptest::prelude::*;
use vgsn_core::model::grid::{assemble_tiles, split_tiles};
use vgsn_core::pgm::{load_pgm, save_pgm};
use vgsn_core::Tensor;

proptest! {
    #[test]
    fn pgm_bytes_roundtrip(w in 1usize..12, h in 1usize..12, seed in any::<u64>()) {
        let payload: Vec<u8> = (0..w * h).map(|i| (seed.rotate_left(i as u32 % 64) ^ i as u64) as u8).collect();
        let mut bytes = format!("P5\n{w} {h}\n255\n").into_bytes();
        bytes.extend_from_slice(&payload);
        let px = load_pgm(&bytes).unwrap();
        prop_assert_eq!(px.shape(), &[h, w, 1]);
        prop_assert_eq!(save_pgm(&px).unwrap(), bytes);
    }

    #[test]
    fn pgm_values_within_half_step(values in prop::collection::vec(0.0f64..=1.0, 1..64)) {
        let n = values.len();
        let px = Tensor::from_vec(&[1, n, 1], values.clone()).unwrap();
        let back = load_pgm(&save_pgm(&px).unwrap()).unwrap();
        for (a, b) in values.iter().zip(back.data()) {
            prop_assert!((a - f64::from(*b)).abs() <= 0.5 / 255.0 + 1e-7);
        }
    }

    #[test]
    fn tiles_roundtrip(g in 1usize..5, t in 1usize..6, batch in 1usize..3, c in 1usize..3) {
        let side = g * t;
        let n = batch * side * side * c;
        let image = Tensor::from_vec(&[batch, side, side, c], (0..n).map(|i| i as f32).collect()).unwrap();
        let tiles = split_tiles(&image, g).unwrap();
        prop_assert_eq!(tiles.shape(), &[batch, g, g, t, t, c]);
        prop_assert_eq!(assemble_tiles(&tiles, g).unwrap(), image);
    }
}
