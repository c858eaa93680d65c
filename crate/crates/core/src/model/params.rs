use crate::error::{Error, Result};
use crate::model::config::{ModelConfig, Variant};
use crate::nn::{BatchNorm, Conv, Dense, Padding, RunningStats};
use crate::rng::{Rng, STREAM_INIT};
use crate::tensor::{Scalar, Tensor};

/// Every trainable tensor of a model. Visiting order (and so the order of
/// [`VgsnParams::tensors`], the optimizer buffers and the model file blob)
/// is: encoder layers (conv kernel, gamma, beta) in order, basis, mu head,
/// sigma head, grid dense (VGSN only), decoder seed, decoder stages (kernel,
/// gamma, beta) in order, combine (kernel, bias). Dense layers visit weight
/// then bias. Convolutions followed by batch norm carry no bias.
#[derive(Clone, Debug, PartialEq)]
pub struct VgsnParams<P> {
    pub encoder: Vec<(Conv<P>, BatchNorm<P>)>,
    pub basis: Dense<P>,
    pub head_mu: Dense<P>,
    pub head_sigma: Dense<P>,
    /// `latent_dim -> g*g*partition_latent_dim`; absent in the baseline VAE.
    pub grid_dense: Option<Dense<P>>,
    pub decoder_seed: Dense<P>,
    pub decoder: Vec<(Conv<P>, BatchNorm<P>)>,
    /// Stride-1 transposed convolution to a single channel.
    pub combine: Conv<P>,
}

impl<P> VgsnParams<P> {
    pub fn map<Q>(&self, mut f: impl FnMut(&P) -> Q) -> VgsnParams<Q> {
        VgsnParams {
            encoder: self.encoder.iter().map(|(c, b)| (c.map(&mut f), b.map(&mut f))).collect(),
            basis: self.basis.map(&mut f),
            head_mu: self.head_mu.map(&mut f),
            head_sigma: self.head_sigma.map(&mut f),
            grid_dense: self.grid_dense.as_ref().map(|d| d.map(&mut f)),
            decoder_seed: self.decoder_seed.map(&mut f),
            decoder: self.decoder.iter().map(|(c, b)| (c.map(&mut f), b.map(&mut f))).collect(),
            combine: self.combine.map(&mut f),
        }
    }

    pub fn visit<'a>(&'a self, mut f: impl FnMut(String, &'a P)) {
        for (i, (c, b)) in self.encoder.iter().enumerate() {
            c.visit(&format!("encoder.{i}.conv"), &mut f);
            b.visit(&format!("encoder.{i}.bn"), &mut f);
        }
        self.basis.visit("basis", &mut f);
        self.head_mu.visit("head_mu", &mut f);
        self.head_sigma.visit("head_sigma", &mut f);
        if let Some(d) = &self.grid_dense {
            d.visit("grid_dense", &mut f);
        }
        self.decoder_seed.visit("decoder_seed", &mut f);
        for (i, (c, b)) in self.decoder.iter().enumerate() {
            c.visit(&format!("decoder.{i}.deconv"), &mut f);
            b.visit(&format!("decoder.{i}.bn"), &mut f);
        }
        self.combine.visit("combine", &mut f);
    }

    pub fn visit_mut<'a>(&'a mut self, mut f: impl FnMut(String, &'a mut P)) {
        for (i, (c, b)) in self.encoder.iter_mut().enumerate() {
            c.visit_mut(&format!("encoder.{i}.conv"), &mut f);
            b.visit_mut(&format!("encoder.{i}.bn"), &mut f);
        }
        self.basis.visit_mut("basis", &mut f);
        self.head_mu.visit_mut("head_mu", &mut f);
        self.head_sigma.visit_mut("head_sigma", &mut f);
        if let Some(d) = &mut self.grid_dense {
            d.visit_mut("grid_dense", &mut f);
        }
        self.decoder_seed.visit_mut("decoder_seed", &mut f);
        for (i, (c, b)) in self.decoder.iter_mut().enumerate() {
            c.visit_mut(&format!("decoder.{i}.deconv"), &mut f);
            b.visit_mut(&format!("decoder.{i}.bn"), &mut f);
        }
        self.combine.visit_mut("combine", &mut f);
    }

    pub fn tensors(&self) -> Vec<&P> {
        let mut v = Vec::new();
        self.visit(|_, p| v.push(p));
        v
    }

    pub fn tensors_mut(&mut self) -> Vec<&mut P> {
        let mut v = Vec::new();
        self.visit_mut(|_, p| v.push(p));
        v
    }

    pub fn named(&self) -> Vec<(String, &P)> {
        let mut v = Vec::new();
        self.visit(|n, p| v.push((n, p)));
        v
    }
}

impl VgsnParams<Vec<usize>> {
    /// Shapes of every tensor for `config`, without allocating any data.
    pub fn shapes(config: &ModelConfig) -> Result<Self> {
        config.validate()?;
        let k = config.kernel_size;
        let conv = |cin: usize, cout: usize, stride: usize, bias: bool| Conv {
            kernel: vec![k, k, cin, cout],
            bias: bias.then(|| vec![cout]),
            stride,
            padding: Padding::Same,
        };
        let dense = |i: usize, o: usize| Dense {
            weight: vec![i, o],
            bias: vec![o],
        };
        let bn = |c: usize| BatchNorm {
            gamma: vec![c],
            beta: vec![c],
        };
        let mut encoder = Vec::new();
        let mut cin = config.channels;
        for &cout in &config.encoder_channels {
            encoder.push((conv(cin, cout, 2, false), bn(cout)));
            cin = cout;
        }
        let seed_area = config.seed_size() * config.seed_size();
        let c0 = config.decoder_channels[0];
        let dp = config.grid.partition_latent_dim;
        let (grid_dense, decoder_seed) = match config.variant {
            Variant::Vgsn => (
                Some(dense(config.latent_dim, config.grid.partitions() * dp)),
                dense(dp, seed_area * c0),
            ),
            Variant::Vae => (None, dense(config.latent_dim, seed_area * c0)),
        };
        let mut decoder = Vec::new();
        let mut cin = c0;
        for &cout in &config.decoder_channels {
            decoder.push((conv(cin, cout, 2, false), bn(cout)));
            cin = cout;
        }
        Ok(Self {
            encoder,
            basis: dense(config.flattened_features(), config.basis_dim),
            head_mu: dense(config.basis_dim, config.latent_dim),
            head_sigma: dense(config.basis_dim, config.latent_dim),
            grid_dense,
            decoder_seed,
            decoder,
            combine: conv(cin, 1, 1, true),
        })
    }

    /// Total number of scalars, or `None` on overflow.
    pub fn element_count(&self) -> Option<usize> {
        self.tensors().into_iter().try_fold(0usize, |acc, s| {
            let n = s.iter().try_fold(1usize, |a, &e| a.checked_mul(e))?;
            acc.checked_add(n)
        })
    }
}

impl<T: Scalar> VgsnParams<Tensor<T>> {
    pub fn parameter_count(&self) -> usize {
        self.tensors().iter().map(|t| t.len()).sum()
    }

    /// Fresh parameters: kernels and dense weights drawn from
    /// `N(0, 2 / fan_in)` (fan-in = product of all but the output axis),
    /// zero biases, batch-norm gamma 1 and beta 0. Draws follow the visiting
    /// order on the init stream of `seed`.
    pub fn init(config: &ModelConfig, seed: u64) -> Result<Self> {
        let mut rng = Rng::with_stream(seed, STREAM_INIT);
        let mut out = Self::skeleton(config)?;
        let mut err = None;
        out.visit_mut(|name, t| {
            if name.ends_with(".kernel") || name.ends_with(".weight") {
                let shape = t.shape();
                let fan_in: usize = shape[..shape.len() - 1].iter().product();
                let scale = (2.0 / fan_in as f64).sqrt();
                for v in t.data_mut() {
                    *v = T::from_f64_lossy(rng.normal() * scale);
                }
            } else if name.ends_with(".gamma") {
                t.data_mut().fill(T::one());
            } else if !(name.ends_with(".bias") || name.ends_with(".beta")) {
                err.get_or_insert(Error::Config(format!("no init rule for {name}")));
            }
        });
        match err {
            Some(e) => Err(e),
            None => Ok(out),
        }
    }

    /// Checks every tensor shape against `config`.
    pub fn check_shapes(&self, config: &ModelConfig) -> Result<()> {
        let want = VgsnParams::shapes(config)?;
        let mine = self.named();
        let want = want.named();
        if mine.len() != want.len() {
            return Err(Error::Shape(format!(
                "parameter set has {} tensors, config needs {}",
                mine.len(),
                want.len()
            )));
        }
        for ((name, a), (_, b)) in mine.iter().zip(&want) {
            if a.shape() != b.as_slice() {
                return Err(Error::Shape(format!(
                    "{name}: shape {:?}, config needs {:?}",
                    a.shape(),
                    b
                )));
            }
        }
        Ok(())
    }

    /// Zero-filled parameters of the right shapes.
    pub fn skeleton(config: &ModelConfig) -> Result<Self> {
        let shapes = VgsnParams::shapes(config)?;
        let mut err = None;
        let out = shapes.map(|s| {
            Tensor::zeros(s).unwrap_or_else(|e| {
                err.get_or_insert(e);
                Tensor::scalar(T::zero())
            })
        });
        match err {
            Some(e) => Err(e),
            None => Ok(out),
        }
    }

    pub fn cast<U: Scalar>(&self) -> VgsnParams<Tensor<U>> {
        self.map(|t| t.cast())
    }
}

/// Running statistics of every batch-norm layer.
#[derive(Clone, Debug, PartialEq)]
pub struct ModelStats<T> {
    pub encoder: Vec<RunningStats<T>>,
    pub decoder: Vec<RunningStats<T>>,
}

impl<T: Scalar> ModelStats<T> {
    pub fn new(config: &ModelConfig) -> Result<Self> {
        Ok(Self {
            encoder: config
                .encoder_channels
                .iter()
                .map(|&c| RunningStats::new(c))
                .collect::<Result<_>>()?,
            decoder: config
                .decoder_channels
                .iter()
                .map(|&c| RunningStats::new(c))
                .collect::<Result<_>>()?,
        })
    }

    pub fn tensors(&self) -> Vec<&Tensor<T>> {
        self.encoder
            .iter()
            .chain(&self.decoder)
            .flat_map(|s| [&s.mean, &s.var])
            .collect()
    }

    pub fn tensors_mut(&mut self) -> Vec<&mut Tensor<T>> {
        self.encoder
            .iter_mut()
            .chain(&mut self.decoder)
            .flat_map(|s| [&mut s.mean, &mut s.var])
            .collect()
    }
}
