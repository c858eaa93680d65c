use crate::error::{Error, Result};
use crate::nn::BatchNormSettings;

/// Default encoder widths; deeper encoders repeat the last entry.
pub const DEFAULT_ENCODER_CHANNELS: [usize; 6] = [16, 32, 64, 128, 128, 128];
/// Default decoder widths; shallower decoders keep the tail of this list.
pub const DEFAULT_DECODER_CHANNELS: [usize; 5] = [128, 64, 32, 16, 8];
pub const DEFAULT_LATENT_DIM: usize = 64;
pub const DEFAULT_PARTITION_LATENT_DIM: usize = 16;
pub const DEFAULT_BASIS_DIM: usize = 512;
pub const DEFAULT_KERNEL_SIZE: usize = 3;

const MAX_IMAGE_SIZE: usize = 4096;
const MAX_KERNEL_SIZE: usize = 15;
const MAX_WIDTH: usize = 1 << 14;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Variant {
    /// Encoder, grid setting layer, per-tile decoder, combine layer.
    Vgsn,
    /// Same stack without the grid setting layer: one decoder pass over the
    /// whole image.
    Vae,
}

impl Variant {
    pub fn as_str(self) -> &'static str {
        match self {
            Variant::Vgsn => "vgsn",
            Variant::Vae => "vae",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "vgsn" => Some(Variant::Vgsn),
            "vae" => Some(Variant::Vae),
            _ => None,
        }
    }
}

/// How the output image is split into independently decoded partitions.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct GridSpec {
    /// Partitions per side.
    pub g: usize,
    /// Latent width of each partition.
    pub partition_latent_dim: usize,
}

impl GridSpec {
    pub fn new(g: usize) -> Self {
        Self {
            g,
            partition_latent_dim: DEFAULT_PARTITION_LATENT_DIM,
        }
    }

    pub fn partitions(&self) -> usize {
        self.g * self.g
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ModelConfig {
    pub variant: Variant,
    pub image_h: usize,
    pub image_w: usize,
    pub channels: usize,
    /// One entry per stride-2 encoder convolution.
    pub encoder_channels: Vec<usize>,
    /// One entry per stride-2 decoder transposed convolution; the decoder
    /// seed produces `decoder_channels[0]` channels.
    pub decoder_channels: Vec<usize>,
    pub latent_dim: usize,
    pub basis_dim: usize,
    pub grid: GridSpec,
    pub kernel_size: usize,
    pub batchnorm: BatchNormSettings,
}

impl ModelConfig {
    /// Default configuration for square images of `size` pixels with a
    /// `g` x `g` grid: encoder depth `min(6, log2 size)`, and the deepest
    /// decoder (at most 5 stages, at most `log2 size - 2`) whose tiles the
    /// grid divides evenly.
    pub fn for_image(variant: Variant, size: usize, g: usize) -> Result<Self> {
        if size < 4 || g == 0 {
            return Err(Error::Config(format!(
                "image size {size} / grid {g} too small"
            )));
        }
        let log2 = usize::BITS as usize - 1 - size.leading_zeros() as usize;
        let encoder_depth = log2.min(6);
        let cap = (log2.saturating_sub(2)).clamp(1, 5);
        let stages = (1..=cap)
            .rev()
            .find(|&s| size.is_multiple_of(g << s))
            .unwrap_or(cap);
        let encoder_channels = (0..encoder_depth)
            .map(|i| DEFAULT_ENCODER_CHANNELS[i.min(DEFAULT_ENCODER_CHANNELS.len() - 1)])
            .collect();
        let decoder_channels = DEFAULT_DECODER_CHANNELS[DEFAULT_DECODER_CHANNELS.len() - stages..].to_vec();
        let config = Self {
            variant,
            image_h: size,
            image_w: size,
            channels: 1,
            encoder_channels,
            decoder_channels,
            latent_dim: DEFAULT_LATENT_DIM,
            basis_dim: DEFAULT_BASIS_DIM,
            grid: GridSpec::new(g),
            kernel_size: DEFAULT_KERNEL_SIZE,
            batchnorm: BatchNormSettings::default(),
        };
        config.validate()?;
        Ok(config)
    }

    /// Full-size configuration: 256 x 256 images, 6 encoder and 5 decoder
    /// stages.
    pub fn full_size(variant: Variant, g: usize) -> Result<Self> {
        Self::for_image(variant, 256, g)
    }

    /// Overrides the number of decoder stages, keeping the default widths.
    pub fn with_decoder_stages(mut self, stages: usize) -> Result<Self> {
        if stages == 0 || stages > DEFAULT_DECODER_CHANNELS.len() {
            return Err(Error::Config(format!(
                "decoder stages must be in 1..={}, got {stages}",
                DEFAULT_DECODER_CHANNELS.len()
            )));
        }
        self.decoder_channels = DEFAULT_DECODER_CHANNELS[DEFAULT_DECODER_CHANNELS.len() - stages..].to_vec();
        self.validate()?;
        Ok(self)
    }

    pub fn encoder_depth(&self) -> usize {
        self.encoder_channels.len()
    }

    pub fn decoder_stages(&self) -> usize {
        self.decoder_channels.len()
    }

    pub fn image_size(&self) -> usize {
        self.image_h
    }

    /// Side of one decoded tile: the partition side for VGSN, the whole
    /// image for the baseline VAE.
    pub fn tile_size(&self) -> usize {
        match self.variant {
            Variant::Vgsn => self.image_h / self.grid.g,
            Variant::Vae => self.image_h,
        }
    }

    /// Spatial side of the decoder seed before upsampling.
    pub fn seed_size(&self) -> usize {
        self.tile_size() >> self.decoder_stages()
    }

    /// Spatial side of the last encoder feature map.
    pub fn encoded_size(&self) -> usize {
        self.image_h >> self.encoder_depth()
    }

    pub fn flattened_features(&self) -> usize {
        let s = self.encoded_size();
        s * s * self.encoder_channels.last().copied().unwrap_or(0)
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |m: String| Err(Error::Config(m));
        if self.image_h != self.image_w {
            return fail(format!("images must be square, got {}x{}", self.image_h, self.image_w));
        }
        if self.channels != 1 {
            return fail(format!("only single-channel images are supported, got {}", self.channels));
        }
        if self.image_h == 0 {
            return fail("image size must be positive".into());
        }
        if self.encoder_channels.is_empty() || self.encoder_channels.contains(&0) {
            return fail(format!("bad encoder channels {:?}", self.encoder_channels));
        }
        if self.decoder_channels.is_empty() || self.decoder_channels.contains(&0) {
            return fail(format!("bad decoder channels {:?}", self.decoder_channels));
        }
        if self.latent_dim == 0 || self.basis_dim == 0 || self.kernel_size == 0 {
            return fail("latent, basis and kernel sizes must be positive".into());
        }
        if self.grid.g == 0 || self.grid.partition_latent_dim == 0 {
            return fail(format!("bad grid {:?}", self.grid));
        }
        let widths = self.encoder_channels.iter().chain(&self.decoder_channels);
        if self.image_h > MAX_IMAGE_SIZE
            || self.grid.g > self.image_h
            || self.kernel_size > MAX_KERNEL_SIZE
            || self.encoder_channels.len() > 16
            || self.decoder_channels.len() > 16
            || widths
                .chain([&self.latent_dim, &self.basis_dim, &self.grid.partition_latent_dim])
                .any(|&w| w > MAX_WIDTH)
        {
            return fail("configuration exceeds supported sizes".into());
        }
        let enc = 1usize.checked_shl(self.encoder_depth() as u32).unwrap_or(0);
        if enc == 0 || !self.image_h.is_multiple_of(enc) {
            return fail(format!(
                "image size {} is not divisible by 2^{} (encoder depth)",
                self.image_h,
                self.encoder_depth()
            ));
        }
        let dec = 1usize.checked_shl(self.decoder_stages() as u32).unwrap_or(0);
        let unit = match self.variant {
            Variant::Vgsn => self.grid.g.checked_mul(dec).unwrap_or(0),
            Variant::Vae => dec,
        };
        if unit == 0 || !self.image_h.is_multiple_of(unit) {
            return fail(format!(
                "image size {} is not divisible by grid {} x 2^{} (decoder stages)",
                self.image_h,
                match self.variant {
                    Variant::Vgsn => self.grid.g,
                    Variant::Vae => 1,
                },
                self.decoder_stages()
            ));
        }
        let bn = self.batchnorm;
        let bn_ok = bn.epsilon > 0.0 && bn.momentum > 0.0 && bn.momentum < 1.0;
        if !bn_ok {
            return fail(format!("bad batch-norm settings {:?}", self.batchnorm));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn full_size_defaults() {
        let c = ModelConfig::full_size(Variant::Vgsn, 8).unwrap();
        assert_eq!(c.encoder_depth(), 6);
        assert_eq!(c.decoder_stages(), 5);
        assert_eq!(c.encoded_size(), 4);
        assert_eq!(c.tile_size(), 32);
        assert_eq!(c.seed_size(), 1);
        let c4 = ModelConfig::full_size(Variant::Vgsn, 4).unwrap();
        assert_eq!(c4.tile_size(), 64);
        assert_eq!(c4.seed_size(), 2);
        assert_eq!(c4.decoder_channels, DEFAULT_DECODER_CHANNELS.to_vec());
        assert_eq!(c4.encoder_channels, DEFAULT_ENCODER_CHANNELS.to_vec());
    }

    #[test]
    fn desk_scale_defaults() {
        let c = ModelConfig::for_image(Variant::Vgsn, 32, 4).unwrap();
        assert_eq!(c.encoder_depth(), 5);
        assert_eq!(c.decoder_stages(), 3);
        assert_eq!(c.tile_size(), 8);
        assert_eq!(c.seed_size(), 1);
        let c2 = ModelConfig::for_image(Variant::Vgsn, 32, 2).unwrap();
        assert_eq!(c2.decoder_stages(), 3);
        assert_eq!(c2.seed_size(), 2);
        let vae = ModelConfig::for_image(Variant::Vae, 32, 4).unwrap();
        assert_eq!(vae.seed_size(), 4);
    }

    #[test]
    fn gradcheck_toy_defaults() {
        let c = ModelConfig::for_image(Variant::Vgsn, 16, 2).unwrap();
        assert_eq!(c.decoder_stages(), 2);
        assert_eq!(c.tile_size(), 8);
        assert_eq!(c.seed_size(), 2);
    }

    #[test]
    fn indivisible_grid_is_config_error() {
        assert!(matches!(
            ModelConfig::for_image(Variant::Vgsn, 32, 3),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn encoder_too_deep() {
        let mut c = ModelConfig::for_image(Variant::Vgsn, 32, 4).unwrap();
        c.encoder_channels = vec![4; 6];
        assert!(c.validate().is_err());
    }
}
