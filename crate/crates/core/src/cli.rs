//! The `vgsn` command line.
//!
//! Training and generation run in `f32`; set `VGSN_PRECISION=f64` to run
//! them in `f64` instead (model files always store `f32`). Gradient checks
//! always run in `f64`.
//!
//! Failures are reported on stderr as a single line
//! `error: <category>: <detail>` with exit code 1.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::autodiff::OpKind;
use crate::bench::{run_bench, DEFAULT_BENCH_IMAGE_SIZE};
use crate::corpus::{codepoint_name, load_paired_corpus, parse_codepoint_file_name};
use crate::error::{Error, Result};
use crate::gradcheck::{model_grad_check, GradCheckOptions};
use crate::model::io::{load_model_file, save_model_file};
use crate::model::{Model, ModelConfig, Sampling, Variant};
use crate::optim::OptimizerKind;
use crate::pgm;
use crate::rng::{Rng, STREAM_GENERATE};
use crate::tensor::{Scalar, Tensor};
use crate::train::{fit_with, loss_csv, loss_csv_without_times, TrainConfig};

pub const PRECISION_ENV: &str = "VGSN_PRECISION";
/// Pass threshold of `vgsn gradcheck`.
pub const GRADCHECK_TOLERANCE: f64 = 1e-4;

#[derive(Parser, Debug)]
#[command(name = "vgsn", version, about = "Few-shot glyph synthesis with a variational grid setting network")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Train on paired glyphs and write a model file and a loss curve.
    Train(TrainArgs),
    /// Generate font-B glyphs from font-A glyphs with a trained model.
    Generate(GenerateArgs),
    /// Time both variants under every grid and optimizer.
    Bench(BenchArgs),
    /// Compare backpropagated gradients of the full loss with finite
    /// differences.
    Gradcheck(GradcheckArgs),
}

#[derive(Args, Debug)]
pub struct TrainArgs {
    /// Directory of source-font glyphs (`U+XXXX.pgm`).
    #[arg(long)]
    pub font_a: PathBuf,
    /// Directory of target-font glyphs (`U+XXXX.pgm`).
    #[arg(long)]
    pub font_b: PathBuf,
    #[arg(long, default_value_t = 4)]
    pub grid: usize,
    #[arg(long, default_value = "adam", value_parser = parse_optimizer)]
    pub optimizer: OptimizerKind,
    #[arg(long, default_value_t = 200)]
    pub epochs: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Defaults to the corpus image size.
    #[arg(long)]
    pub image_size: Option<usize>,
    /// Model file to write.
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub loss_csv: Option<PathBuf>,
    #[arg(long, default_value = "vgsn", value_parser = parse_variant)]
    pub variant: Variant,
    #[arg(long, default_value_t = crate::train::DEFAULT_BATCH_SIZE)]
    pub batch_size: usize,
    /// Defaults to 0.01 for SGD and 0.001 for Adam and RMSprop.
    #[arg(long)]
    pub learning_rate: Option<f64>,
    #[arg(long, default_value_t = 0.0)]
    pub kl_weight: f64,
    /// Fill the `seconds` column of the loss curve with measured epoch
    /// times. Off by default so that reruns produce identical files.
    #[arg(long)]
    pub record_time: bool,
}

#[derive(Args, Debug)]
pub struct GenerateArgs {
    #[arg(long)]
    pub model: PathBuf,
    /// A PGM file or a directory of `U+XXXX.pgm` files.
    #[arg(long)]
    pub input: PathBuf,
    /// Output file, or output directory when `--input` is a directory.
    #[arg(long)]
    pub out: PathBuf,
    /// Sample the latent code with fresh noise instead of using the mean.
    #[arg(long)]
    pub stochastic: bool,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Args, Debug)]
pub struct BenchArgs {
    #[arg(long)]
    pub font_a: PathBuf,
    #[arg(long)]
    pub font_b: PathBuf,
    #[arg(long, default_value_t = 5)]
    pub epochs: usize,
    /// Glyphs are resampled to this size when the corpus differs.
    #[arg(long, default_value_t = DEFAULT_BENCH_IMAGE_SIZE)]
    pub image_size: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// CSV report to write.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args, Debug)]
pub struct GradcheckArgs {
    #[arg(long, default_value_t = 16)]
    pub image_size: usize,
    #[arg(long, default_value_t = 2)]
    pub grid: usize,
    #[arg(long, default_value_t = 2)]
    pub stages: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Batch norm on the 1x1 encoder map degenerates with fewer than 4.
    #[arg(long, default_value_t = 4)]
    pub batch_size: usize,
    /// Elements checked per parameter tensor; 0 checks every element.
    #[arg(long, default_value_t = 24)]
    pub samples: usize,
    #[arg(long, default_value_t = crate::gradcheck::DEFAULT_STEP)]
    pub step: f64,
    /// Test hook: deliberately break the backward rule of one operation.
    #[arg(long, hide = true, value_parser = parse_op)]
    pub corrupt_backward: Option<OpKind>,
}

fn parse_optimizer(s: &str) -> std::result::Result<OptimizerKind, String> {
    OptimizerKind::parse(s).ok_or_else(|| format!("unknown optimizer {s:?} (sgd, adam, rmsprop)"))
}

fn parse_variant(s: &str) -> std::result::Result<Variant, String> {
    Variant::parse(s).ok_or_else(|| format!("unknown model {s:?} (vgsn, vae)"))
}

fn parse_op(s: &str) -> std::result::Result<OpKind, String> {
    OpKind::parse(s).ok_or_else(|| format!("unknown operation {s:?}"))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Precision {
    F32,
    F64,
}

impl Precision {
    pub fn from_env() -> Result<Self> {
        match std::env::var(PRECISION_ENV) {
            Err(_) => Ok(Precision::F32),
            Ok(v) => match v.as_str() {
                "" | "f32" | "32" => Ok(Precision::F32),
                "f64" | "64" => Ok(Precision::F64),
                other => Err(Error::Config(format!("{PRECISION_ENV}={other:?}: expected f32 or f64"))),
            },
        }
    }
}

/// Parses `args` (including the program name) and runs the command,
/// writing human-readable output to `out`.
pub fn run<I, S>(args: I, out: &mut dyn Write) -> Result<()>
where
    I: IntoIterator<Item = S>,
    S: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            let _ = write!(out, "{e}");
            return Ok(());
        }
        Err(e) => {
            let msg = e.to_string();
            let first = msg.lines().next().unwrap_or("").trim_start_matches("error: ");
            return Err(Error::Config(first.to_string()));
        }
    };
    let precision = Precision::from_env()?;
    match cli.command {
        Command::Train(a) => match precision {
            Precision::F32 => train::<f32>(&a, out),
            Precision::F64 => train::<f64>(&a, out),
        },
        Command::Generate(a) => match precision {
            Precision::F32 => generate::<f32>(&a, out),
            Precision::F64 => generate::<f64>(&a, out),
        },
        Command::Bench(a) => bench(&a, out),
        Command::Gradcheck(a) => gradcheck(&a, out),
    }
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    std::fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

fn say(out: &mut dyn Write, line: std::fmt::Arguments) {
    let _ = writeln!(out, "{line}");
}

fn train<T: Scalar>(a: &TrainArgs, out: &mut dyn Write) -> Result<()> {
    let corpus = load_paired_corpus(&a.font_a, &a.font_b)?;
    for s in &corpus.skipped {
        eprintln!("skipped {s}");
    }
    let size = a.image_size.unwrap_or(corpus.image_size);
    if size != corpus.image_size {
        return Err(Error::Config(format!(
            "--image-size {size} but the corpus glyphs are {0}x{0}",
            corpus.image_size
        )));
    }
    let config = ModelConfig::for_image(a.variant, size, a.grid)?;
    let mut settings = TrainConfig::new(a.optimizer, a.epochs, a.seed);
    settings.batch_size = a.batch_size;
    settings.kl_weight = a.kl_weight;
    if let Some(lr) = a.learning_rate {
        settings.optimizer = settings.optimizer.with_learning_rate(lr);
    }
    settings.validate()?;
    let mut model = Model::<T>::new(config, a.seed)?;
    let curve = fit_with(&mut model, &corpus, &settings, |_| {})?;
    save_model_file(&model, &a.out)?;
    if let Some(path) = &a.loss_csv {
        let csv = if a.record_time { loss_csv(&curve) } else { loss_csv_without_times(&curve) };
        write_file(path, csv.as_bytes())?;
    }
    match (curve.first(), curve.last()) {
        (Some(first), Some(last)) => say(
            out,
            format_args!(
                "trained {} epochs on {} pairs: loss {:.6} -> {:.6}",
                curve.len(),
                corpus.len(),
                first.mean_loss,
                last.mean_loss
            ),
        ),
        _ => say(out, format_args!("trained 0 epochs")),
    }
    say(out, format_args!("model written to {}", a.out.display()));
    Ok(())
}

fn generate<T: Scalar>(a: &GenerateArgs, out: &mut dyn Write) -> Result<()> {
    let model: Model<T> = load_model_file(&a.model)?;
    let jobs: Vec<(PathBuf, PathBuf)> = if a.input.is_dir() {
        let mut files = Vec::new();
        let entries = std::fs::read_dir(&a.input).map_err(|e| Error::io(&a.input, e))?;
        for entry in entries {
            let path = entry.map_err(|e| Error::io(&a.input, e))?.path();
            if path.extension().is_some_and(|e| e == "pgm") && path.is_file() {
                files.push(path);
            }
        }
        files.sort();
        if files.is_empty() {
            return Err(Error::Corpus(format!("{}: no .pgm files", a.input.display())));
        }
        std::fs::create_dir_all(&a.out).map_err(|e| Error::io(&a.out, e))?;
        files
            .into_iter()
            .map(|f| {
                let name = f.file_name().expect("listed file").to_owned();
                (f, a.out.join(name))
            })
            .collect()
    } else {
        vec![(a.input.clone(), a.out.clone())]
    };
    let mut rng = Rng::with_stream(a.seed, STREAM_GENERATE);
    for (src, dst) in &jobs {
        let pixels = pgm::load_pgm_file(src)?;
        let size = model.config.image_size();
        if pixels.shape() != [size, size, 1] {
            return Err(Error::Shape(format!(
                "{}: image is {}x{} but the model expects {size}x{size}",
                src.display(),
                pixels.shape()[1],
                pixels.shape()[0]
            )));
        }
        let batch = pixels.cast::<T>().reshape(&[1, size, size, 1])?;
        let sampling = if a.stochastic {
            Sampling::Noise(rng.normal_tensor(&[1, model.config.latent_dim])?)
        } else {
            Sampling::Mean
        };
        let image = model.generate(&batch, &sampling)?;
        pgm::save_pgm_file(&image.reshape(&[size, size, 1])?, dst)?;
        let label = src
            .file_name()
            .and_then(|n| n.to_str())
            .and_then(parse_codepoint_file_name)
            .map_or_else(|| src.display().to_string(), codepoint_name);
        say(out, format_args!("{label} -> {}", dst.display()));
    }
    Ok(())
}

fn bench(a: &BenchArgs, out: &mut dyn Write) -> Result<()> {
    let corpus = load_paired_corpus(&a.font_a, &a.font_b)?;
    let report = run_bench(&corpus, a.epochs, a.image_size, a.seed, |row| {
        eprintln!(
            "{} {}x{} {}: {:.4} s/epoch, final loss {:.6}",
            row.model.as_str(),
            row.grid,
            row.grid,
            row.optimizer,
            row.sec_per_epoch,
            row.final_loss
        );
    })?;
    write_file(&a.out, report.to_csv().as_bytes())?;
    let _ = write!(out, "{}", report.to_table());
    Ok(())
}

/// Seeded inputs, targets and latent noise for a gradient check.
pub fn gradcheck_problem(
    config: &ModelConfig,
    batch: usize,
    seed: u64,
) -> Result<(Tensor<f64>, Tensor<f64>, Tensor<f64>)> {
    let mut rng = Rng::with_stream(seed, STREAM_GENERATE);
    let shape = [batch, config.image_h, config.image_w, 1];
    let mut x = Tensor::zeros(&shape)?;
    let mut y = Tensor::zeros(&shape)?;
    for v in x.data_mut().iter_mut().chain(y.data_mut()) {
        *v = rng.uniform();
    }
    let eps = rng.normal_tensor(&[batch, config.latent_dim])?;
    Ok((x, y, eps))
}

fn gradcheck(a: &GradcheckArgs, out: &mut dyn Write) -> Result<()> {
    let config = ModelConfig::for_image(Variant::Vgsn, a.image_size, a.grid)?.with_decoder_stages(a.stages)?;
    let model = Model::<f64>::new(config.clone(), a.seed)?;
    let (x, y, eps) = gradcheck_problem(&config, a.batch_size, a.seed)?;
    let options = GradCheckOptions {
        step: a.step,
        max_elements_per_tensor: (a.samples > 0).then_some(a.samples),
        seed: a.seed,
    };
    let check = model_grad_check(&model, &x, &y, &Sampling::Noise(eps), options, a.corrupt_backward)?;
    for (group, err) in check.per_group() {
        say(out, format_args!("{group:<24} {err:.3e}"));
    }
    let max = check.report.max_relative_error;
    let group = check.worst_group().unwrap_or("-").to_string();
    say(
        out,
        format_args!(
            "max relative error {max:.3e} over {} elements (worst: {group})",
            check.report.elements_checked
        ),
    );
    if let Some(w) = &check.report.worst {
        say(
            out,
            format_args!(
                "worst element: {}[{}] analytic {:.9e} numeric {:.9e}",
                check.names[w.tensor], w.element, w.analytic, w.numeric
            ),
        );
    }
    if max < GRADCHECK_TOLERANCE {
        say(out, format_args!("PASS"));
        Ok(())
    } else {
        Err(Error::Autodiff(format!(
            "gradient check failed: max relative error {max:.3e} >= {GRADCHECK_TOLERANCE:e} in {group}"
        )))
    }
}
