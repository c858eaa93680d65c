//! Random model files for serialization fuzzing.

use vgsn_core::model::io::{load_model, save_model};
use vgsn_core::model::{GridSpec, Variant};
use vgsn_core::nn::BatchNormSettings;
use vgsn_core::{Model, ModelConfig, Rng};

fn pick(rng: &mut Rng, lo: usize, hi: usize) -> usize {
    lo + rng.below_or_eq((hi - lo) as u64) as usize
}

pub fn random_config(rng: &mut Rng) -> ModelConfig {
    let variant = if rng.uniform() < 0.5 { Variant::Vgsn } else { Variant::Vae };
    let depth = pick(rng, 1, 3);
    let stages = pick(rng, 1, 2);
    let g = pick(rng, 1, 3);
    let size = g * (1 << depth.max(stages)) * pick(rng, 1, 2);
    ModelConfig {
        variant,
        image_h: size,
        image_w: size,
        channels: 1,
        encoder_channels: (0..depth).map(|_| pick(rng, 1, 4)).collect(),
        decoder_channels: (0..stages).map(|_| pick(rng, 1, 4)).collect(),
        latent_dim: pick(rng, 1, 4),
        basis_dim: pick(rng, 1, 8),
        grid: GridSpec {
            g,
            partition_latent_dim: pick(rng, 1, 4),
        },
        kernel_size: pick(rng, 1, 3),
        batchnorm: BatchNormSettings {
            momentum: [0.9, 0.5, 0.99][pick(rng, 0, 2)],
            epsilon: [1e-5, 1e-3, 0.1][pick(rng, 0, 2)],
        },
    }
}

/// Random bit patterns, restricted to finite values (and non-negative
/// variances) so the model is valid.
pub fn random_model(rng: &mut Rng) -> Model<f32> {
    let config = random_config(rng);
    let mut model = Model::<f32>::new(config, rng.next_u64()).unwrap();
    let draw = |rng: &mut Rng, non_negative: bool| loop {
        let v = f32::from_bits(rng.next_u64() as u32);
        if v.is_finite() && !(non_negative && v.is_sign_negative()) {
            return v;
        }
    };
    for t in model.params.tensors_mut() {
        for v in t.data_mut() {
            *v = draw(rng, false);
        }
    }
    for s in model.stats.encoder.iter_mut().chain(&mut model.stats.decoder) {
        for v in s.mean.data_mut() {
            *v = draw(rng, false);
        }
        for v in s.var.data_mut() {
            *v = draw(rng, true);
        }
    }
    model
}

pub fn bits(model: &Model<f32>) -> Vec<u32> {
    let mut out = Vec::new();
    for t in model.params.tensors() {
        out.extend(t.data().iter().map(|v| v.to_bits()));
    }
    for s in model.stats.encoder.iter().chain(&model.stats.decoder) {
        out.extend(s.mean.data().iter().chain(s.var.data()).map(|v| v.to_bits()));
    }
    out
}

/// `None` when `bytes` are rejected with a format error, else what went
/// wrong.
pub fn rejection_problem(bytes: &[u8]) -> Option<String> {
    match load_model::<f32>(bytes) {
        Ok(_) => Some("damaged stream loaded".into()),
        Err(e) if e.category() == "format" => None,
        Err(e) => Some(format!("wrong error category: {e}")),
    }
}

/// One roundtrip plus three corruptions of a random model; returns the
/// first problem found.
pub fn fuzz_case(rng: &mut Rng) -> Option<String> {
    let model = random_model(rng);
    let bytes = save_model(&model).unwrap();
    let back = match load_model::<f32>(&bytes) {
        Ok(m) => m,
        Err(e) => return Some(format!("roundtrip failed: {e}")),
    };
    if back.config != model.config || bits(&back) != bits(&model) || save_model(&back).unwrap() != bytes {
        return Some(format!("roundtrip differs for {:?}", model.config));
    }
    let cut = rng.below_or_eq(bytes.len() as u64 - 1) as usize;
    let mut flipped = bytes.clone();
    let at = rng.below_or_eq(bytes.len() as u64 - 1) as usize;
    flipped[at] ^= 1 << rng.below_or_eq(7);
    let mut longer = bytes.clone();
    longer.extend_from_slice(&[0, 0, 0, 0]);
    let damaged: [(&str, &[u8]); 3] = [("truncated", &bytes[..cut]), ("bit flip", &flipped), ("trailing bytes", &longer)];
    damaged
        .iter()
        .find_map(|(what, b)| rejection_problem(b).map(|p| format!("{what}: {p}")))
}

