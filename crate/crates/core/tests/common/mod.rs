#![allow(dead_code)]

pub mod fuzz;
pub mod oracle;

use std::path::PathBuf;

use vgsn_core::{Rng, Tensor};

pub fn fixtures() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures")
}

pub fn font_a() -> PathBuf {
    fixtures().join("font_a")
}

pub fn font_b() -> PathBuf {
    fixtures().join("font_b")
}

pub fn uniform(rng: &mut Rng, shape: &[usize], lo: f64, hi: f64) -> Tensor<f64> {
    let n: usize = shape.iter().product();
    let v = (0..n).map(|_| lo + (hi - lo) * rng.uniform()).collect();
    Tensor::from_vec(shape, v).unwrap()
}

pub fn range(rng: &mut Rng, lo: usize, hi: usize) -> usize {
    lo + rng.below_or_eq((hi - lo) as u64) as usize
}

/// Largest elementwise difference relative to the largest oracle magnitude.
pub fn rel_err(got: &[f64], want: &[f64]) -> f64 {
    assert_eq!(got.len(), want.len());
    let scale = want.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(1e-300);
    got.iter().zip(want).fold(0.0f64, |m, (a, b)| m.max((a - b).abs())) / scale
}

use vgsn_core::corpus::{load_paired_corpus, PairedCorpus};
use vgsn_core::model::{Sampling, Variant};
use vgsn_core::optim::OptimizerKind;
use vgsn_core::train::{fit, LossRecord, TrainConfig};
use vgsn_core::{Model, ModelConfig};

pub const FEW_SHOT_EPOCHS: usize = 200;
pub const FEW_SHOT_SEED: u64 = 7;

pub fn fixture_corpus() -> PairedCorpus {
    load_paired_corpus(&font_a(), &font_b()).unwrap()
}

pub fn mse32(a: &Tensor<f32>, b: &Tensor<f32>) -> f64 {
    let s: f64 = a.data().iter().zip(b.data()).map(|(x, y)| (f64::from(*x) - f64::from(*y)).powi(2)).sum();
    s / a.len() as f64
}

/// Grid 4, Adam 0.001, 200 epochs, seed 7 on `corpus`.
pub fn train_few_shot(corpus: &PairedCorpus) -> (Model<f32>, Vec<LossRecord>) {
    let config = ModelConfig::for_image(Variant::Vgsn, corpus.image_size, 4).unwrap();
    let mut model = Model::<f32>::new(config, FEW_SHOT_SEED).unwrap();
    let settings = TrainConfig::new(OptimizerKind::Adam, FEW_SHOT_EPOCHS, FEW_SHOT_SEED);
    let curve = fit(&mut model, corpus, &settings).unwrap();
    (model, curve)
}

/// Deterministic (z = mu) generation of one glyph.
pub fn generate_one(model: &Model<f32>, input: &Tensor<f32>) -> Tensor<f32> {
    let s = input.shape()[0];
    let x = input.reshape(&[1, s, s, 1]).unwrap();
    model.generate(&x, &Sampling::Mean).unwrap().reshape(&[s, s, 1]).unwrap()
}

/// Mean reconstruction MSE over the training pairs.
pub fn training_set_mse(model: &Model<f32>, corpus: &PairedCorpus) -> f64 {
    let total: f64 = corpus
        .pairs
        .iter()
        .map(|p| mse32(&generate_one(model, &p.image_a.pixels), &p.image_b.pixels))
        .sum();
    total / corpus.len() as f64
}

pub struct Transfer {
    pub generated_mse: f64,
    pub mean_predictor_mse: f64,
}

/// Holds out F (its strokes all appear in E), trains on the other four
/// pairs with the few-shot settings and scores the generated F.
pub fn transfer_f() -> Transfer {
    let (train, held) = fixture_corpus().hold_out(&['F']).unwrap();
    let (model, _) = train_few_shot(&train);
    let target = &held[0].image_b.pixels;
    Transfer {
        generated_mse: mse32(&generate_one(&model, &held[0].image_a.pixels), target),
        mean_predictor_mse: mse32(&train.mean_target(), target),
    }
}
