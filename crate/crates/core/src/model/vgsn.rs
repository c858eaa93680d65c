//! Forward pass of the grid-setting network and of the baseline VAE.

use crate::autodiff::{Tape, Var};
use crate::error::{Error, Result};
use crate::model::config::{GridSpec, ModelConfig, Variant};
use crate::model::params::{ModelStats, VgsnParams};
use crate::nn::{self, Activation, Mode};
use crate::tensor::{lit, Scalar, Tensor};

/// Encoder outputs: mean `mu` and log-scale `sigma`, each `[B, latent_dim]`.
#[derive(Clone, Copy, Debug)]
pub struct LatentStats {
    pub mu: Var,
    pub sigma: Var,
}

/// How the latent code is formed from the encoder statistics.
#[derive(Clone, Debug)]
pub enum Sampling<T> {
    /// `z = mu`.
    Mean,
    /// `z = mu + exp(sigma) * phi(eps)` with the given standard-normal draws.
    Noise(Tensor<T>),
}

pub struct ForwardOutput {
    pub image: Var,
    pub latent: LatentStats,
    pub z: Var,
}

const INV_SQRT_2PI: f64 = 0.398_942_280_401_432_7;

/// Standard normal density.
pub fn gaussian_density<T: Scalar>(x: T) -> T {
    lit::<T>(INV_SQRT_2PI) * (-(x * x) / lit(2.0)).exp()
}

/// `mu + exp(sigma) * phi(eps)` evaluated directly on tensors.
pub fn sample_latent_values<T: Scalar>(mu: &Tensor<T>, sigma: &Tensor<T>, eps: &Tensor<T>) -> Result<Tensor<T>> {
    mu.expect_same_shape(sigma, "sample_latent")?;
    mu.expect_same_shape(eps, "sample_latent")?;
    let data = mu
        .data()
        .iter()
        .zip(sigma.data())
        .zip(eps.data())
        .map(|((&m, &s), &e)| m + s.exp() * gaussian_density(e))
        .collect();
    let z = Tensor::from_parts(mu.shape().to_vec(), data);
    z.ensure_finite("sample_latent")?;
    Ok(z)
}

/// Differentiable latent sampling: `z = mu + exp(sigma) * phi(eps)`.
pub fn sample_latent<T: Scalar>(tape: &mut Tape<T>, stats: LatentStats, eps: &Tensor<T>) -> Result<Var> {
    let mu_shape = tape.value(stats.mu)?.shape().to_vec();
    if tape.value(stats.sigma)?.shape() != mu_shape.as_slice() || eps.shape() != mu_shape.as_slice() {
        return Err(Error::Shape(format!(
            "sample_latent: mu {mu_shape:?}, sigma {:?}, eps {:?}",
            tape.value(stats.sigma)?.shape(),
            eps.shape()
        )));
    }
    let density = tape.constant(eps.map(gaussian_density));
    let scale = tape.exp(stats.sigma)?;
    let offset = tape.mul(scale, density)?;
    tape.add(stats.mu, offset)
}

fn check_batch<T: Scalar>(tape: &Tape<T>, x: Var, config: &ModelConfig) -> Result<usize> {
    let s = tape.value(x)?.shape();
    if s.len() != 4 || s[1] != config.image_h || s[2] != config.image_w || s[3] != config.channels {
        return Err(Error::Shape(format!(
            "batch shape {s:?} does not match [B,{},{},{}]",
            config.image_h, config.image_w, config.channels
        )));
    }
    Ok(s[0])
}

/// Encoder: stride-2 conv, batch norm, ReLU per layer; flatten; dense basis
/// with ReLU; two dense heads for `mu` and `sigma`.
pub fn encode<T: Scalar>(
    tape: &mut Tape<T>,
    params: &VgsnParams<Var>,
    stats: &mut ModelStats<T>,
    config: &ModelConfig,
    x: Var,
    mode: Mode,
) -> Result<LatentStats> {
    let batch = check_batch(tape, x, config)?;
    let mut h = x;
    for ((conv, bn), running) in params.encoder.iter().zip(&mut stats.encoder) {
        h = nn::conv2d(tape, h, conv)?;
        h = nn::batchnorm(tape, h, bn, running, config.batchnorm, mode)?;
        h = nn::activation(tape, h, Activation::Relu)?;
    }
    let flat = tape.reshape(h, &[batch, config.flattened_features()])?;
    let basis = nn::dense(tape, flat, &params.basis)?;
    let basis = nn::activation(tape, basis, Activation::Relu)?;
    Ok(LatentStats {
        mu: nn::dense(tape, basis, &params.head_mu)?,
        sigma: nn::dense(tape, basis, &params.head_sigma)?,
    })
}

/// Grid setting layer: dense `d -> g*g*d_p`, reshaped to `[B, g, g, d_p]`.
pub fn grid_expand<T: Scalar>(tape: &mut Tape<T>, params: &VgsnParams<Var>, z: Var, grid: GridSpec) -> Result<Var> {
    let dense = params
        .grid_dense
        .as_ref()
        .ok_or_else(|| Error::Config("model has no grid setting layer".into()))?;
    let expanded = nn::dense(tape, z, dense)?;
    let batch = tape.value(z)?.shape()[0];
    tape.reshape(expanded, &[batch, grid.g, grid.g, grid.partition_latent_dim])
}

/// Seed dense, reshape to `s0 x s0 x c0`, then stride-2 transposed conv,
/// batch norm, ReLU per stage. `codes` is `[N, width]`; returns
/// `[N, t, t, c_last]`.
fn decoder_stack<T: Scalar>(
    tape: &mut Tape<T>,
    params: &VgsnParams<Var>,
    stats: &mut ModelStats<T>,
    config: &ModelConfig,
    codes: Var,
    mode: Mode,
) -> Result<Var> {
    let n = tape.value(codes)?.shape()[0];
    let s0 = config.seed_size();
    let seed = nn::dense(tape, codes, &params.decoder_seed)?;
    let mut h = tape.reshape(seed, &[n, s0, s0, config.decoder_channels[0]])?;
    for ((deconv, bn), running) in params.decoder.iter().zip(&mut stats.decoder) {
        h = nn::conv_transpose2d(tape, h, deconv)?;
        h = nn::batchnorm(tape, h, bn, running, config.batchnorm, mode)?;
        h = nn::activation(tape, h, Activation::Relu)?;
    }
    Ok(h)
}

/// Decodes every partition latent with the shared decoder:
/// `[B, g, g, d_p] -> [B, g, g, t, t, c_last]`.
pub fn decode_tiles<T: Scalar>(
    tape: &mut Tape<T>,
    params: &VgsnParams<Var>,
    stats: &mut ModelStats<T>,
    config: &ModelConfig,
    tiles: Var,
    mode: Mode,
) -> Result<Var> {
    let s = tape.value(tiles)?.shape().to_vec();
    let g = config.grid.g;
    if s.len() != 4 || s[1] != g || s[2] != g {
        return Err(Error::Shape(format!("decode_tiles: expected [B,{g},{g},d_p], got {s:?}")));
    }
    let t = config.tile_size();
    if t * g != config.image_h || config.seed_size() << config.decoder_stages() != t || config.seed_size() == 0 {
        return Err(Error::Config(format!(
            "tile size {t} is not seed size times 2^{}",
            config.decoder_stages()
        )));
    }
    let codes = tape.reshape(tiles, &[s[0] * g * g, s[3]])?;
    let decoded = decoder_stack(tape, params, stats, config, codes, mode)?;
    let c_last = *config.decoder_channels.last().expect("validated");
    tape.reshape(decoded, &[s[0], g, g, t, t, c_last])
}

/// Lays tiles out in grid order and merges them with the single-channel
/// combine layer followed by a sigmoid.
pub fn assemble_and_combine<T: Scalar>(
    tape: &mut Tape<T>,
    params: &VgsnParams<Var>,
    tiles: Var,
    grid: usize,
) -> Result<Var> {
    let image = tape.assemble_tiles(tiles, grid)?;
    combine(tape, params, image)
}

fn combine<T: Scalar>(tape: &mut Tape<T>, params: &VgsnParams<Var>, image: Var) -> Result<Var> {
    let merged = nn::conv_transpose2d(tape, image, &params.combine)?;
    nn::activation(tape, merged, Activation::Sigmoid)
}

fn latent_code<T: Scalar>(tape: &mut Tape<T>, latent: LatentStats, sampling: &Sampling<T>) -> Result<Var> {
    match sampling {
        Sampling::Mean => Ok(latent.mu),
        Sampling::Noise(eps) => sample_latent(tape, latent, eps),
    }
}

/// Full pipeline for either variant.
pub fn forward<T: Scalar>(
    tape: &mut Tape<T>,
    params: &VgsnParams<Var>,
    stats: &mut ModelStats<T>,
    config: &ModelConfig,
    x: Var,
    sampling: &Sampling<T>,
    mode: Mode,
) -> Result<ForwardOutput> {
    match config.variant {
        Variant::Vgsn => vgsn_forward(tape, params, stats, config, x, sampling, mode),
        Variant::Vae => vae_forward(tape, params, stats, config, x, sampling, mode),
    }
}

/// encode -> sample -> grid expand -> decode tiles -> assemble and combine.
pub fn vgsn_forward<T: Scalar>(
    tape: &mut Tape<T>,
    params: &VgsnParams<Var>,
    stats: &mut ModelStats<T>,
    config: &ModelConfig,
    x: Var,
    sampling: &Sampling<T>,
    mode: Mode,
) -> Result<ForwardOutput> {
    if config.variant != Variant::Vgsn {
        return Err(Error::Config("vgsn_forward needs a VGSN configuration".into()));
    }
    let latent = encode(tape, params, stats, config, x, mode)?;
    let z = latent_code(tape, latent, sampling)?;
    let grid = grid_expand(tape, params, z, config.grid)?;
    let tiles = decode_tiles(tape, params, stats, config, grid, mode)?;
    let image = assemble_and_combine(tape, params, tiles, config.grid.g)?;
    Ok(ForwardOutput { image, latent, z })
}

/// Baseline: the latent code seeds one decoder pass over the full image.
pub fn vae_forward<T: Scalar>(
    tape: &mut Tape<T>,
    params: &VgsnParams<Var>,
    stats: &mut ModelStats<T>,
    config: &ModelConfig,
    x: Var,
    sampling: &Sampling<T>,
    mode: Mode,
) -> Result<ForwardOutput> {
    if config.variant != Variant::Vae {
        return Err(Error::Config("vae_forward needs a VAE configuration".into()));
    }
    let latent = encode(tape, params, stats, config, x, mode)?;
    let z = latent_code(tape, latent, sampling)?;
    let decoded = decoder_stack(tape, params, stats, config, z, mode)?;
    let image = combine(tape, params, decoded)?;
    Ok(ForwardOutput { image, latent, z })
}
