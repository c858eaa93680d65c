//! Epoch loop, loss curves and their CSV export.

use std::io::Write;
use std::time::Instant;

use crate::corpus::{codepoint_name, make_batches, PairedCorpus};
use crate::error::{Error, Result};
use crate::model::{Model, Sampling};
use crate::nn::Mode;
use crate::optim::{OptimizerKind, OptimizerSettings, OptimizerState};
use crate::rng::Rng;
use crate::tensor::{Scalar, Tensor};

pub const DEFAULT_BATCH_SIZE: usize = 32;

#[derive(Clone, Debug, PartialEq)]
pub struct TrainConfig {
    pub batch_size: usize,
    pub epochs: usize,
    pub seed: u64,
    pub optimizer: OptimizerSettings,
    /// Weight of the Gaussian KL term; 0 trains on MSE alone.
    pub kl_weight: f64,
}

impl TrainConfig {
    pub fn new(optimizer: OptimizerKind, epochs: usize, seed: u64) -> Self {
        Self {
            batch_size: DEFAULT_BATCH_SIZE,
            epochs,
            seed,
            optimizer: OptimizerSettings::new(optimizer),
            kl_weight: 0.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.batch_size == 0 {
            return Err(Error::Config("batch size must be at least 1".into()));
        }
        if !(self.kl_weight.is_finite() && self.kl_weight >= 0.0) {
            return Err(Error::Config(format!("bad KL weight {}", self.kl_weight)));
        }
        self.optimizer.validate()
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LossRecord {
    /// 1-based.
    pub epoch: usize,
    /// Mean of the per-batch losses.
    pub mean_loss: f64,
    pub wall_time_seconds: f64,
}

/// One shuffled pass over `corpus`: per batch a train-mode forward pass with
/// fresh latent noise, MSE against the font-B targets, backward, and one
/// optimizer step. The final partial batch is trained too, except that a
/// single leftover pair is merged into the batch before it. `epoch` only
/// labels the record.
pub fn train_epoch<T: Scalar>(
    model: &mut Model<T>,
    optimizer: &mut OptimizerState<T>,
    corpus: &PairedCorpus,
    config: &TrainConfig,
    epoch: usize,
    rng: &mut Rng,
) -> Result<LossRecord> {
    config.validate()?;
    if corpus.image_size != model.config.image_size() {
        return Err(Error::Config(format!(
            "corpus images are {0}x{0} but the model expects {1}x{1}",
            corpus.image_size,
            model.config.image_size()
        )));
    }
    let start = Instant::now();
    let mut batches = make_batches::<T>(corpus, config.batch_size, rng)?;
    // A lone trailing sample would leave batch norm a single value per
    // channel once the encoder reaches 1x1; it joins the previous batch.
    if batches.len() > 1 && batches.last().is_some_and(|b| b.codepoints.len() == 1) {
        let last = batches.pop().expect("checked");
        let prev = batches.last_mut().expect("checked");
        prev.codepoints.extend(last.codepoints);
        prev.inputs = Tensor::concat(&prev.inputs, &last.inputs)?;
        prev.targets = Tensor::concat(&prev.targets, &last.targets)?;
    }
    let mut total = 0.0f64;
    for (i, batch) in batches.iter().enumerate() {
        let b = batch.inputs.shape()[0];
        let eps = rng.normal_tensor::<T>(&[b, model.config.latent_dim])?;
        let step = model
            .loss_and_grads(&batch.inputs, &batch.targets, &Sampling::Noise(eps), Mode::Train, config.kl_weight)
            .and_then(|r| {
                let loss = r.loss.as_f64();
                if !loss.is_finite() {
                    return Err(Error::NonFinite(format!("loss is {loss}")));
                }
                optimizer.step_model(&mut model.params, &r.grads)?;
                Ok(loss)
            });
        match step {
            Ok(loss) => total += loss,
            Err(Error::NonFinite(detail)) => {
                let glyphs: Vec<String> = batch.codepoints.iter().map(|&c| codepoint_name(c)).collect();
                return Err(Error::NonFinite(format!(
                    "training aborted at epoch {epoch}, batch {} ({}): {detail}",
                    i + 1,
                    glyphs.join(" ")
                )));
            }
            Err(e) => return Err(e),
        }
    }
    Ok(LossRecord {
        epoch,
        mean_loss: total / batches.len() as f64,
        wall_time_seconds: start.elapsed().as_secs_f64(),
    })
}

/// Runs `config.epochs` epochs from a fresh optimizer state. Epoch `e`
/// shuffles and samples with `Rng::for_epoch(config.seed, e)`.
pub fn fit<T: Scalar>(model: &mut Model<T>, corpus: &PairedCorpus, config: &TrainConfig) -> Result<Vec<LossRecord>> {
    fit_with(model, corpus, config, |_| {})
}

/// [`fit`] with a callback after each epoch.
pub fn fit_with<T: Scalar>(
    model: &mut Model<T>,
    corpus: &PairedCorpus,
    config: &TrainConfig,
    mut on_epoch: impl FnMut(&LossRecord),
) -> Result<Vec<LossRecord>> {
    config.validate()?;
    let mut optimizer = OptimizerState::new(config.optimizer)?;
    let mut curve = Vec::with_capacity(config.epochs);
    for epoch in 1..=config.epochs {
        let mut rng = Rng::for_epoch(config.seed, epoch);
        let record = train_epoch(model, &mut optimizer, corpus, config, epoch, &mut rng)?;
        on_epoch(&record);
        curve.push(record);
    }
    Ok(curve)
}

/// Formats `x` with 9 significant digits in scientific notation.
pub fn sig9(x: f64) -> String {
    format!("{x:.8e}")
}

/// `epoch,loss,seconds` with one row per record.
pub fn loss_csv(curve: &[LossRecord]) -> String {
    let mut out = String::from("epoch,loss,seconds\n");
    for r in curve {
        out.push_str(&format!("{},{},{}\n", r.epoch, sig9(r.mean_loss), sig9(r.wall_time_seconds)));
    }
    out
}

/// Like [`loss_csv`] with the time column zeroed, for comparing curves
/// across runs.
pub fn loss_csv_without_times(curve: &[LossRecord]) -> String {
    let zeroed: Vec<LossRecord> = curve
        .iter()
        .map(|r| LossRecord {
            wall_time_seconds: 0.0,
            ..*r
        })
        .collect();
    loss_csv(&zeroed)
}

pub fn write_loss_csv(curve: &[LossRecord], out: &mut impl Write) -> std::io::Result<()> {
    out.write_all(loss_csv(curve).as_bytes())
}
