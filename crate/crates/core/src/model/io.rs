//! Model files.
//!
//! A model file is a UTF-8 text header followed by a binary blob:
//!
//! ```text
//! VGSN-MODEL
//! version 1
//! variant vgsn
//! image_h 32
//! image_w 32
//! channels 1
//! encoder_depth 5
//! decoder_stages 3
//! latent_dim 64
//! grid 4
//! partition_latent_dim 16
//! basis_dim 512
//! encoder_channels 16,32,64,128,128
//! decoder_channels 32,16,8
//! kernel_size 3
//! bn_momentum 0.9
//! bn_epsilon 1e-5
//! values 215153
//! sha256 <64 lowercase hex digits>
//! data
//! ```
//!
//! Every line ends with `\n` and keys appear in exactly this order. After
//! `data\n` come `values` little-endian IEEE-754 `f32`s: the parameters in
//! [`VgsnParams`] visiting order, then the running mean and variance of
//! every batch-norm layer (encoder layers first, then decoder stages). The
//! checksum is SHA-256 over the header bytes before the `sha256` line
//! followed by the blob.

use std::fmt::Write as _;
use std::path::Path;

use sha2::{Digest, Sha256};

use crate::error::{Error, FormatError, Result};
use crate::model::config::{GridSpec, ModelConfig, Variant};
use crate::model::params::{ModelStats, VgsnParams};
use crate::model::Model;
use crate::nn::BatchNormSettings;
use crate::tensor::{Scalar, Tensor};

pub const MAGIC: &str = "VGSN-MODEL";
pub const FORMAT_VERSION: u32 = 1;
const MAX_HEADER_BYTES: usize = 4096;

fn hex(bytes: &[u8]) -> String {
    bytes.iter().fold(String::with_capacity(64), |mut s, b| {
        let _ = write!(s, "{b:02x}");
        s
    })
}

fn join(v: &[usize]) -> String {
    v.iter().map(usize::to_string).collect::<Vec<_>>().join(",")
}

fn stats_count(config: &ModelConfig) -> usize {
    2 * config
        .encoder_channels
        .iter()
        .chain(&config.decoder_channels)
        .sum::<usize>()
}

/// Serializes `model`; parameters are stored as `f32`.
pub fn save_model<T: Scalar>(model: &Model<T>) -> Result<Vec<u8>> {
    let c = &model.config;
    model.params.check_shapes(c)?;
    let values: Vec<&Tensor<T>> = model
        .params
        .tensors()
        .into_iter()
        .chain(model.stats.tensors())
        .collect();
    let count: usize = values.iter().map(|t| t.len()).sum();

    let mut header = String::new();
    let _ = writeln!(header, "{MAGIC}");
    let _ = writeln!(header, "version {FORMAT_VERSION}");
    let _ = writeln!(header, "variant {}", c.variant.as_str());
    let _ = writeln!(header, "image_h {}", c.image_h);
    let _ = writeln!(header, "image_w {}", c.image_w);
    let _ = writeln!(header, "channels {}", c.channels);
    let _ = writeln!(header, "encoder_depth {}", c.encoder_depth());
    let _ = writeln!(header, "decoder_stages {}", c.decoder_stages());
    let _ = writeln!(header, "latent_dim {}", c.latent_dim);
    let _ = writeln!(header, "grid {}", c.grid.g);
    let _ = writeln!(header, "partition_latent_dim {}", c.grid.partition_latent_dim);
    let _ = writeln!(header, "basis_dim {}", c.basis_dim);
    let _ = writeln!(header, "encoder_channels {}", join(&c.encoder_channels));
    let _ = writeln!(header, "decoder_channels {}", join(&c.decoder_channels));
    let _ = writeln!(header, "kernel_size {}", c.kernel_size);
    let _ = writeln!(header, "bn_momentum {:?}", c.batchnorm.momentum);
    let _ = writeln!(header, "bn_epsilon {:?}", c.batchnorm.epsilon);
    let _ = writeln!(header, "values {count}");

    let mut blob = Vec::with_capacity(count * 4);
    for t in values {
        for &v in t.data() {
            let f = v.as_f64() as f32;
            if !f.is_finite() {
                return Err(Error::NonFinite("parameter does not fit in f32".into()));
            }
            blob.extend_from_slice(&f.to_le_bytes());
        }
    }
    let mut hasher = Sha256::new();
    hasher.update(header.as_bytes());
    hasher.update(&blob);
    let digest = hex(&hasher.finalize());
    let _ = writeln!(header, "sha256 {digest}");
    header.push_str("data\n");

    let mut out = header.into_bytes();
    out.extend_from_slice(&blob);
    Ok(out)
}

struct HeaderReader<'a> {
    lines: std::str::Split<'a, char>,
}

impl<'a> HeaderReader<'a> {
    fn field(&mut self, key: &str) -> Result<&'a str> {
        let line = self
            .lines
            .next()
            .ok_or_else(|| Error::format(FormatError::Truncated, format!("header ends before `{key}`")))?;
        line.strip_prefix(key)
            .and_then(|rest| rest.strip_prefix(' '))
            .ok_or_else(|| Error::format(FormatError::BadHeader, format!("expected `{key}`, found {line:?}")))
    }

    fn number(&mut self, key: &str) -> Result<usize> {
        let v = self.field(key)?;
        v.parse()
            .map_err(|_| Error::format(FormatError::BadHeader, format!("{key}: not a count: {v:?}")))
    }

    fn float(&mut self, key: &str) -> Result<f64> {
        let v = self.field(key)?;
        v.parse::<f64>()
            .ok()
            .filter(|f| f.is_finite())
            .ok_or_else(|| Error::format(FormatError::BadHeader, format!("{key}: not a number: {v:?}")))
    }

    fn list(&mut self, key: &str) -> Result<Vec<usize>> {
        let v = self.field(key)?;
        v.split(',')
            .map(|s| s.parse())
            .collect::<std::result::Result<_, _>>()
            .map_err(|_| Error::format(FormatError::BadHeader, format!("{key}: bad list {v:?}")))
    }
}

/// Parses a model file produced by [`save_model`].
pub fn load_model<T: Scalar>(bytes: &[u8]) -> Result<Model<T>> {
    if !bytes.starts_with(MAGIC.as_bytes()) {
        let n = bytes.len().min(MAGIC.len());
        return Err(if MAGIC.as_bytes().starts_with(&bytes[..n]) && n < MAGIC.len() {
            Error::format(FormatError::Truncated, "stream ends inside the magic string")
        } else {
            Error::format(FormatError::BadMagic, "not a model file")
        });
    }
    let search = &bytes[..bytes.len().min(MAX_HEADER_BYTES)];
    let marker = b"\nsha256 ";
    let sha_at = find(search, marker);
    let end_at = find(search, b"\ndata\n");
    let (sha_at, end_at) = match (sha_at, end_at) {
        (Some(s), Some(e)) if s < e => (s + 1, e + 1),
        _ if bytes.len() < MAX_HEADER_BYTES => {
            return Err(Error::format(FormatError::Truncated, "stream ends inside the header"));
        }
        _ => return Err(Error::format(FormatError::BadHeader, "no header terminator")),
    };
    let header = std::str::from_utf8(&bytes[..end_at + "data".len()])
        .map_err(|_| Error::format(FormatError::BadHeader, "header is not UTF-8"))?;
    let blob = &bytes[end_at + "data\n".len()..];

    let mut r = HeaderReader {
        lines: header.split('\n'),
    };
    if r.lines.next() != Some(MAGIC) {
        return Err(Error::format(FormatError::BadMagic, "not a model file"));
    }
    let version = r.number("version")?;
    if version != FORMAT_VERSION as usize {
        return Err(Error::format(
            FormatError::UnsupportedVersion,
            format!("version {version}, expected {FORMAT_VERSION}"),
        ));
    }
    let variant_s = r.field("variant")?;
    let variant = Variant::parse(variant_s)
        .ok_or_else(|| Error::format(FormatError::BadHeader, format!("unknown variant {variant_s:?}")))?;
    let image_h = r.number("image_h")?;
    let image_w = r.number("image_w")?;
    let channels = r.number("channels")?;
    let encoder_depth = r.number("encoder_depth")?;
    let decoder_stages = r.number("decoder_stages")?;
    let latent_dim = r.number("latent_dim")?;
    let g = r.number("grid")?;
    let partition_latent_dim = r.number("partition_latent_dim")?;
    let basis_dim = r.number("basis_dim")?;
    let encoder_channels = r.list("encoder_channels")?;
    let decoder_channels = r.list("decoder_channels")?;
    let kernel_size = r.number("kernel_size")?;
    let momentum = r.float("bn_momentum")?;
    let epsilon = r.float("bn_epsilon")?;
    let values = r.number("values")?;
    let digest = r.field("sha256")?;
    if r.lines.next() != Some("data") {
        return Err(Error::format(FormatError::BadHeader, "missing `data` line"));
    }

    if encoder_channels.len() != encoder_depth || decoder_channels.len() != decoder_stages {
        return Err(Error::format(
            FormatError::BadHeader,
            "channel lists disagree with encoder_depth / decoder_stages",
        ));
    }
    let config = ModelConfig {
        variant,
        image_h,
        image_w,
        channels,
        encoder_channels,
        decoder_channels,
        latent_dim,
        basis_dim,
        grid: GridSpec {
            g,
            partition_latent_dim,
        },
        kernel_size,
        batchnorm: BatchNormSettings { momentum, epsilon },
    };
    config
        .validate()
        .map_err(|e| Error::format(FormatError::BadHeader, e.to_string()))?;

    let shapes = VgsnParams::shapes(&config)?;
    let expected = shapes
        .element_count()
        .and_then(|n| n.checked_add(stats_count(&config)))
        .ok_or_else(|| Error::format(FormatError::SizeMismatch, "configuration too large"))?;
    if values != expected {
        return Err(Error::format(
            FormatError::SizeMismatch,
            format!("header declares {values} values but the configuration needs {expected}"),
        ));
    }
    let want_bytes = expected * 4;
    if blob.len() < want_bytes {
        return Err(Error::format(
            FormatError::Truncated,
            format!("blob has {} bytes, expected {want_bytes}", blob.len()),
        ));
    }
    if blob.len() > want_bytes {
        return Err(Error::format(
            FormatError::SizeMismatch,
            format!("{} trailing bytes after the blob", blob.len() - want_bytes),
        ));
    }
    let mut hasher = Sha256::new();
    hasher.update(&bytes[..sha_at]);
    hasher.update(blob);
    if hex(&hasher.finalize()) != digest {
        return Err(Error::format(FormatError::Checksum, "header or blob corrupted"));
    }

    let mut floats = blob.chunks_exact(4).map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]));
    let mut fill = |t: &mut Tensor<T>| -> Result<()> {
        for v in t.data_mut() {
            let f = floats.next().expect("length checked");
            if !f.is_finite() {
                return Err(Error::format(FormatError::BadValue, "non-finite value in blob"));
            }
            *v = T::from_f64_lossy(f as f64);
        }
        Ok(())
    };
    let mut params = VgsnParams::<Tensor<T>>::skeleton(&config)?;
    for t in params.tensors_mut() {
        fill(t)?;
    }
    let mut stats = ModelStats::new(&config)?;
    for t in stats.tensors_mut() {
        fill(t)?;
    }
    if stats
        .encoder
        .iter()
        .chain(&stats.decoder)
        .any(|s| s.var.data().iter().any(|&v| v < T::zero()))
    {
        return Err(Error::format(FormatError::BadValue, "negative running variance"));
    }
    Ok(Model { config, params, stats })
}

fn find(haystack: &[u8], needle: &[u8]) -> Option<usize> {
    haystack.windows(needle.len()).position(|w| w == needle)
}

pub fn save_model_file<T: Scalar>(model: &Model<T>, path: &Path) -> Result<()> {
    let bytes = save_model(model)?;
    std::fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

pub fn load_model_file<T: Scalar>(path: &Path) -> Result<Model<T>> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    load_model(&bytes)
}
