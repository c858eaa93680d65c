//! Central finite-difference checks of tape gradients, in `f64`.
//!
//! For every checked element the relative error is
//! `|analytic - numeric| / max(|analytic|, |numeric|, 1e-8)` with
//! `numeric = (f(x + h) - f(x - h)) / 2h`.
//!
//! Networks with ReLUs are only piecewise smooth. A step is accepted only
//! when `x - h`, `x` and `x + h` give the same ReLU sign pattern, so the
//! difference never straddles a kink; otherwise the element is re-measured
//! with `h / 10`, down to [`MIN_STEP`]. Elements are never skipped: the last
//! measurement is reported whatever it is.

use crate::autodiff::{OpKind, Tape, Var};
use crate::error::{Error, Result};
use crate::model::{Model, Sampling, VgsnParams};
use crate::nn::Mode;
use crate::rng::Rng;
use crate::tensor::Tensor;

pub const DEFAULT_STEP: f64 = 1e-4;
pub const MIN_STEP: f64 = 1e-8;
const FLOOR: f64 = 1e-8;

pub fn relative_error(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(FLOOR)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GradCheckOptions {
    pub step: f64,
    /// Check at most this many elements per tensor, chosen with `seed`;
    /// `None` checks every element.
    pub max_elements_per_tensor: Option<usize>,
    pub seed: u64,
}

impl Default for GradCheckOptions {
    fn default() -> Self {
        Self {
            step: DEFAULT_STEP,
            max_elements_per_tensor: None,
            seed: 0,
        }
    }
}

/// Worst element found so far.
#[derive(Clone, Debug, PartialEq)]
pub struct Worst {
    pub tensor: usize,
    pub element: usize,
    pub analytic: f64,
    pub numeric: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct GradCheckReport {
    pub max_relative_error: f64,
    /// Largest relative error per input tensor.
    pub per_tensor: Vec<f64>,
    pub worst: Option<Worst>,
    pub elements_checked: usize,
}

fn pick_elements(len: usize, limit: Option<usize>, rng: &mut Rng) -> Vec<usize> {
    match limit {
        Some(k) if k < len => {
            let mut all: Vec<usize> = (0..len).collect();
            rng.shuffle(&mut all);
            let mut chosen = all[..k].to_vec();
            chosen.sort_unstable();
            chosen
        }
        _ => (0..len).collect(),
    }
}

/// Compares the tape gradient of the scalar `f` at `params` against central
/// differences. `f` receives a fresh tape and one tracked [`Var`] per tensor
/// of `params`.
pub fn grad_check(
    params: &[Tensor<f64>],
    options: GradCheckOptions,
    f: impl Fn(&mut Tape<f64>, &[Var]) -> Result<Var>,
) -> Result<GradCheckReport> {
    grad_check_with(params, options, None, f)
}

#[doc(hidden)]
pub fn grad_check_with(
    params: &[Tensor<f64>],
    options: GradCheckOptions,
    corrupt: Option<OpKind>,
    f: impl Fn(&mut Tape<f64>, &[Var]) -> Result<Var>,
) -> Result<GradCheckReport> {
    let h = options.step;
    if !(h.is_finite() && h > 0.0) {
        return Err(Error::Config(format!("finite-difference step must be positive, got {h}")));
    }
    let mut tape = Tape::new();
    if let Some(kind) = corrupt {
        tape.corrupt_backward(kind);
    }
    let vars: Vec<Var> = params.iter().map(|p| tape.param(p.clone())).collect();
    let out = f(&mut tape, &vars)?;
    let mut grads = tape.backward(out)?;
    let analytic: Vec<Tensor<f64>> = vars.iter().zip(params).map(|(&v, p)| grads.take_or_zero(v, p)).collect();

    let eval = |ps: &[Tensor<f64>]| -> Result<(f64, Vec<bool>)> {
        let mut tape = Tape::new();
        let vars: Vec<Var> = ps.iter().map(|p| tape.constant(p.clone())).collect();
        let out = f(&mut tape, &vars)?;
        Ok((tape.value(out)?.item()?, tape.relu_pattern()))
    };

    let mut rng = Rng::new(options.seed);
    let mut work: Vec<Tensor<f64>> = params.to_vec();
    let (_, centre) = eval(&work)?;
    let mut report = GradCheckReport {
        max_relative_error: 0.0,
        per_tensor: vec![0.0; params.len()],
        worst: None,
        elements_checked: 0,
    };
    for (t, grad) in analytic.iter().enumerate() {
        for i in pick_elements(params[t].len(), options.max_elements_per_tensor, &mut rng) {
            let x = params[t].data()[i];
            let mut step = h;
            let numeric = loop {
                work[t].data_mut()[i] = x + step;
                let (up, up_pattern) = eval(&work)?;
                work[t].data_mut()[i] = x - step;
                let (down, down_pattern) = eval(&work)?;
                work[t].data_mut()[i] = x;
                let smooth = up_pattern == centre && down_pattern == centre;
                if smooth || step / 10.0 < MIN_STEP {
                    break (up - down) / (2.0 * step);
                }
                step /= 10.0;
            };
            if !numeric.is_finite() {
                return Err(Error::NonFinite(format!("finite difference of tensor {t} element {i}")));
            }
            let a = grad.data()[i];
            let err = relative_error(a, numeric);
            report.elements_checked += 1;
            report.per_tensor[t] = report.per_tensor[t].max(err);
            if err > report.max_relative_error || report.worst.is_none() {
                report.max_relative_error = report.max_relative_error.max(err);
                report.worst = Some(Worst {
                    tensor: t,
                    element: i,
                    analytic: a,
                    numeric,
                });
            }
        }
    }
    Ok(report)
}

/// Gradient check of the full model loss (MSE of the reconstruction, in
/// train mode with latent noise) over every parameter tensor.
#[derive(Clone, Debug, PartialEq)]
pub struct ModelGradCheck {
    pub report: GradCheckReport,
    /// Parameter names in visiting order, aligned with `report.per_tensor`.
    pub names: Vec<String>,
}

impl ModelGradCheck {
    /// Layer of the worst element, e.g. `decoder.1.deconv`.
    pub fn worst_group(&self) -> Option<&str> {
        let w = self.report.worst.as_ref()?;
        let name = self.names.get(w.tensor)?;
        Some(name.rsplit_once('.').map_or(name.as_str(), |(group, _)| group))
    }

    /// Largest error per layer, in visiting order.
    pub fn per_group(&self) -> Vec<(String, f64)> {
        let mut out: Vec<(String, f64)> = Vec::new();
        for (name, &err) in self.names.iter().zip(&self.report.per_tensor) {
            let group = name.rsplit_once('.').map_or(name.as_str(), |(g, _)| g);
            match out.last_mut() {
                Some((g, e)) if g == group => *e = e.max(err),
                _ => out.push((group.to_string(), err)),
            }
        }
        out
    }
}

pub fn model_grad_check(
    model: &Model<f64>,
    inputs: &Tensor<f64>,
    targets: &Tensor<f64>,
    sampling: &Sampling<f64>,
    options: GradCheckOptions,
    corrupt: Option<OpKind>,
) -> Result<ModelGradCheck> {
    let names: Vec<String> = model.params.named().into_iter().map(|(n, _)| n).collect();
    let params: Vec<Tensor<f64>> = model.params.tensors().into_iter().cloned().collect();
    let report = grad_check_with(&params, options, corrupt, |tape, vars| {
        let mut it = vars.iter();
        let bound: VgsnParams<Var> = model.params.map(|_| *it.next().expect("one var per tensor"));
        let x = tape.constant(inputs.clone());
        let y = tape.constant(targets.clone());
        let mut stats = model.stats.clone();
        let out = crate::model::vgsn::forward(tape, &bound, &mut stats, &model.config, x, sampling, Mode::Train)?;
        tape.mse(out.image, y)
    })?;
    Ok(ModelGradCheck { report, names })
}
