//! Per-epoch timing of both variants under every optimizer and grid.

use std::fmt::Write as _;

use crate::corpus::PairedCorpus;
use crate::error::{Error, Result};
use crate::model::{Model, ModelConfig, Variant};
use crate::optim::OptimizerKind;
use crate::train::{fit, sig9, TrainConfig};

pub const GRIDS: [usize; 2] = [4, 8];
pub const VARIANTS: [Variant; 2] = [Variant::Vgsn, Variant::Vae];
pub const DEFAULT_BENCH_IMAGE_SIZE: usize = 64;
pub const CSV_HEADER: &str = "model,grid,optimizer,epochs,sec_per_epoch,final_loss,paper_ref_sec";
pub const REFERENCE_COLUMN_LABEL: &str = "published (256², reference hardware)";

/// Published seconds per run at 256 x 256 on the reference hardware.
pub fn published_reference_seconds(variant: Variant, grid: usize, optimizer: OptimizerKind) -> Option<u32> {
    use OptimizerKind::*;
    let row = match (variant, grid) {
        (Variant::Vae, 4) => [87, 96, 95],
        (Variant::Vae, 8) => [179, 177, 175],
        (Variant::Vgsn, 4) => [78, 77, 74],
        (Variant::Vgsn, 8) => [148, 157, 154],
        _ => return None,
    };
    Some(match optimizer {
        Sgd => row[0],
        Adam => row[1],
        RmsProp => row[2],
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct BenchRow {
    pub model: Variant,
    pub grid: usize,
    pub optimizer: OptimizerKind,
    pub epochs: usize,
    pub sec_per_epoch: f64,
    pub final_loss: f64,
    pub reference_sec: Option<u32>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct BenchReport {
    pub rows: Vec<BenchRow>,
    pub image_size: usize,
    pub corpus_size: usize,
    /// Original glyph size when the corpus was resampled for the run.
    pub resampled_from: Option<usize>,
}

impl BenchReport {
    pub fn to_csv(&self) -> String {
        let mut out = format!("{CSV_HEADER}\n");
        for r in &self.rows {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{}",
                r.model.as_str(),
                r.grid,
                r.optimizer,
                r.epochs,
                sig9(r.sec_per_epoch),
                sig9(r.final_loss),
                r.reference_sec.map_or(String::new(), |s| s.to_string())
            );
        }
        out
    }

    pub fn environment_note(&self) -> String {
        let mut note = format!(
            "image size {0}x{0}, corpus of {1} pairs",
            self.image_size, self.corpus_size
        );
        if let Some(from) = self.resampled_from {
            let _ = write!(note, " (resampled from {from}x{from})");
        }
        note
    }

    /// Fixed-width table of the CSV rows.
    pub fn to_table(&self) -> String {
        let mut out = format!(
            "{:<6}{:<6}{:<10}{:>8}{:>14}{:>14}  {}\n",
            "model", "grid", "optimizer", "epochs", "sec/epoch", "final loss", REFERENCE_COLUMN_LABEL
        );
        for r in &self.rows {
            let _ = writeln!(
                out,
                "{:<6}{:<6}{:<10}{:>8}{:>14.6}{:>14.6}  {}",
                r.model.as_str(),
                format!("{0}x{0}", r.grid),
                r.optimizer.as_str(),
                r.epochs,
                r.sec_per_epoch,
                r.final_loss,
                r.reference_sec.map_or("-".to_string(), |s| format!("{s} s"))
            );
        }
        let _ = writeln!(out, "{}", self.environment_note());
        out
    }
}

/// Trains a fresh model for every (variant, grid, optimizer) combination in
/// sequence and reports the mean epoch time and final loss of each.
pub fn run_bench(
    corpus: &PairedCorpus,
    epochs: usize,
    image_size: usize,
    seed: u64,
    mut progress: impl FnMut(&BenchRow),
) -> Result<BenchReport> {
    if epochs == 0 {
        return Err(Error::Config("bench needs at least one epoch".into()));
    }
    let resampled_from = (corpus.image_size != image_size).then_some(corpus.image_size);
    let corpus = corpus.resized(image_size)?;
    let mut rows = Vec::new();
    for variant in VARIANTS {
        for grid in GRIDS {
            let config = ModelConfig::for_image(variant, image_size, grid)?;
            for optimizer in OptimizerKind::ALL {
                let mut model = Model::<f32>::new(config.clone(), seed)?;
                let curve = fit(&mut model, &corpus, &TrainConfig::new(optimizer, epochs, seed))?;
                let seconds: f64 = curve.iter().map(|r| r.wall_time_seconds).sum();
                let row = BenchRow {
                    model: variant,
                    grid,
                    optimizer,
                    epochs,
                    sec_per_epoch: seconds / epochs as f64,
                    final_loss: curve.last().map_or(f64::NAN, |r| r.mean_loss),
                    reference_sec: published_reference_seconds(variant, grid, optimizer),
                };
                progress(&row);
                rows.push(row);
            }
        }
    }
    Ok(BenchReport {
        rows,
        image_size,
        corpus_size: corpus.len(),
        resampled_from,
    })
}
