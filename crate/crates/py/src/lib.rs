//! Python bindings for `vgsn-core`.
//!
//! Images cross the boundary as flat row-major lists of floats in `[0, 1]`.

use std::path::PathBuf;

use pyo3::exceptions::{PyOSError, PyRuntimeError, PyValueError};
use pyo3::prelude::*;

use vgsn_core::cli::gradcheck_problem;
use vgsn_core::corpus::load_paired_corpus;
use vgsn_core::gradcheck::{model_grad_check, GradCheckOptions};
use vgsn_core::model::io::{load_model_file, save_model_file};
use vgsn_core::model::vgsn::sample_latent_values;
use vgsn_core::model::{Sampling, Variant};
use vgsn_core::optim::{OptimizerKind, OptimizerSettings, OptimizerState};
use vgsn_core::train::{fit, TrainConfig};
use vgsn_core::{pgm, Error, Model as CoreModel, ModelConfig, Rng, Tensor};

fn py_err(e: Error) -> PyErr {
    let msg = format!("{}: {e}", e.category());
    match e {
        Error::Io { .. } => PyOSError::new_err(msg),
        Error::NonFinite(_) | Error::Autodiff(_) => PyRuntimeError::new_err(msg),
        _ => PyValueError::new_err(msg),
    }
}

fn variant(name: &str) -> PyResult<Variant> {
    Variant::parse(name).ok_or_else(|| PyValueError::new_err(format!("unknown model {name:?} (vgsn, vae)")))
}

fn optimizer(name: &str) -> PyResult<OptimizerKind> {
    OptimizerKind::parse(name).ok_or_else(|| PyValueError::new_err(format!("unknown optimizer {name:?}")))
}

/// A VGSN or baseline VAE model in 32-bit precision.
#[pyclass(name = "Model")]
struct PyModel {
    inner: CoreModel<f32>,
}

#[pymethods]
impl PyModel {
    #[new]
    #[pyo3(signature = (image_size = 32, grid = 4, seed = 0, variant = "vgsn"))]
    fn new(image_size: usize, grid: usize, seed: u64, variant: &str) -> PyResult<Self> {
        let config = ModelConfig::for_image(self::variant(variant)?, image_size, grid).map_err(py_err)?;
        Ok(Self {
            inner: CoreModel::new(config, seed).map_err(py_err)?,
        })
    }

    #[staticmethod]
    fn load(path: PathBuf) -> PyResult<Self> {
        Ok(Self {
            inner: load_model_file(&path).map_err(py_err)?,
        })
    }

    fn save(&self, path: PathBuf) -> PyResult<()> {
        save_model_file(&self.inner, &path).map_err(py_err)
    }

    #[getter]
    fn image_size(&self) -> usize {
        self.inner.config.image_size()
    }

    #[getter]
    fn grid(&self) -> usize {
        self.inner.config.grid.g
    }

    #[getter]
    fn variant(&self) -> &'static str {
        self.inner.config.variant.as_str()
    }

    #[getter]
    fn latent_dim(&self) -> usize {
        self.inner.config.latent_dim
    }

    #[getter]
    fn parameter_count(&self) -> usize {
        self.inner.parameter_count()
    }

    /// Trains on the glyph pairs of two `U+XXXX.pgm` directories and
    /// returns the mean loss of every epoch.
    #[pyo3(signature = (font_a, font_b, optimizer = "adam", epochs = 200, seed = 0, batch_size = 32, learning_rate = None))]
    #[allow(clippy::too_many_arguments)]
    fn train(
        &mut self,
        py: Python<'_>,
        font_a: PathBuf,
        font_b: PathBuf,
        optimizer: &str,
        epochs: usize,
        seed: u64,
        batch_size: usize,
        learning_rate: Option<f64>,
    ) -> PyResult<Vec<f64>> {
        let mut settings = TrainConfig::new(self::optimizer(optimizer)?, epochs, seed);
        settings.batch_size = batch_size;
        if let Some(lr) = learning_rate {
            settings.optimizer = settings.optimizer.with_learning_rate(lr);
        }
        let model = &mut self.inner;
        let curve = py
            .detach(|| {
                let corpus = load_paired_corpus(&font_a, &font_b)?;
                fit(model, &corpus, &settings)
            })
            .map_err(py_err)?;
        Ok(curve.iter().map(|r| r.mean_loss).collect())
    }

    /// Generates one glyph. Without `noise_seed` the latent code is the
    /// encoder mean; with it, fresh noise is drawn from that seed.
    #[pyo3(signature = (pixels, noise_seed = None))]
    fn generate(&self, pixels: Vec<f32>, noise_seed: Option<u64>) -> PyResult<Vec<f32>> {
        let s = self.inner.config.image_size();
        let x = Tensor::from_vec(&[1, s, s, 1], pixels).map_err(py_err)?;
        let sampling = match noise_seed {
            None => Sampling::Mean,
            Some(seed) => {
                let eps = Rng::new(seed).normal_tensor(&[1, self.inner.config.latent_dim]).map_err(py_err)?;
                Sampling::Noise(eps)
            }
        };
        Ok(self.inner.generate(&x, &sampling).map_err(py_err)?.data().to_vec())
    }

    fn __repr__(&self) -> String {
        let c = &self.inner.config;
        format!(
            "Model(variant={:?}, image_size={}, grid={}, parameters={})",
            c.variant.as_str(),
            c.image_size(),
            c.grid.g,
            self.inner.parameter_count()
        )
    }
}

/// SGD, Adam or RMSprop over a fixed list of flat parameter vectors.
#[pyclass(name = "Optimizer")]
struct PyOptimizer {
    state: OptimizerState<f64>,
}

#[pymethods]
impl PyOptimizer {
    #[new]
    #[pyo3(signature = (kind, learning_rate = None))]
    fn new(kind: &str, learning_rate: Option<f64>) -> PyResult<Self> {
        let kind = optimizer(kind)?;
        let settings = OptimizerSettings::new(kind).with_learning_rate(learning_rate.unwrap_or(kind.default_learning_rate()));
        Ok(Self {
            state: OptimizerState::new(settings).map_err(py_err)?,
        })
    }

    /// Applies one update and returns the new parameters.
    fn step(&mut self, params: Vec<Vec<f64>>, grads: Vec<Vec<f64>>) -> PyResult<Vec<Vec<f64>>> {
        let to_tensor = |v: Vec<f64>| Tensor::from_vec(&[v.len()], v).map_err(py_err);
        let mut ps = params.into_iter().map(to_tensor).collect::<PyResult<Vec<_>>>()?;
        let gs = grads.into_iter().map(to_tensor).collect::<PyResult<Vec<_>>>()?;
        let mut refs: Vec<&mut Tensor<f64>> = ps.iter_mut().collect();
        let grefs: Vec<&Tensor<f64>> = gs.iter().collect();
        self.state.step(&mut refs, &grefs).map_err(py_err)?;
        Ok(ps.into_iter().map(|t| t.data().to_vec()).collect())
    }

    #[getter]
    fn steps(&self) -> u64 {
        self.state.step
    }
}

/// Reads a binary PGM; returns `(height, width, pixels)`.
#[pyfunction]
fn load_pgm(path: PathBuf) -> PyResult<(usize, usize, Vec<f32>)> {
    let t = pgm::load_pgm_file(&path).map_err(py_err)?;
    Ok((t.shape()[0], t.shape()[1], t.data().to_vec()))
}

#[pyfunction]
fn save_pgm(path: PathBuf, height: usize, width: usize, pixels: Vec<f32>) -> PyResult<()> {
    let t = Tensor::from_vec(&[height, width, 1], pixels).map_err(py_err)?;
    pgm::save_pgm_file(&t, &path).map_err(py_err)
}

/// `mu + exp(sigma) * phi(eps)` elementwise.
#[pyfunction]
fn sample_latent(mu: Vec<f64>, sigma: Vec<f64>, eps: Vec<f64>) -> PyResult<Vec<f64>> {
    let t = |v: Vec<f64>| Tensor::from_vec(&[v.len()], v).map_err(py_err);
    let z = sample_latent_values(&t(mu)?, &t(sigma)?, &t(eps)?).map_err(py_err)?;
    Ok(z.data().to_vec())
}

/// Largest relative error between backpropagated and finite-difference
/// gradients of the full model loss, in 64-bit.
#[pyfunction]
#[pyo3(signature = (image_size = 16, grid = 2, stages = 2, seed = 0, batch_size = 4, samples = 24))]
fn gradcheck(
    py: Python<'_>,
    image_size: usize,
    grid: usize,
    stages: usize,
    seed: u64,
    batch_size: usize,
    samples: usize,
) -> PyResult<f64> {
    py.detach(|| {
        let config = ModelConfig::for_image(Variant::Vgsn, image_size, grid)?.with_decoder_stages(stages)?;
        let model = CoreModel::<f64>::new(config.clone(), seed)?;
        let (x, y, eps) = gradcheck_problem(&config, batch_size, seed)?;
        let options = GradCheckOptions {
            max_elements_per_tensor: (samples > 0).then_some(samples),
            seed,
            ..Default::default()
        };
        model_grad_check(&model, &x, &y, &Sampling::Noise(eps), options, None)
    })
    .map(|c| c.report.max_relative_error)
    .map_err(py_err)
}

#[pymodule]
fn vgsn(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyModel>()?;
    m.add_class::<PyOptimizer>()?;
    m.add_function(wrap_pyfunction!(load_pgm, m)?)?;
    m.add_function(wrap_pyfunction!(save_pgm, m)?)?;
    m.add_function(wrap_pyfunction!(sample_latent, m)?)?;
    m.add_function(wrap_pyfunction!(gradcheck, m)?)?;
    Ok(())
}
