//! Paired glyph corpora: font-A inputs and font-B targets keyed by
//! codepoint, stored as `<dir>/U+XXXX.pgm`.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::pgm;
use crate::rng::Rng;
use crate::tensor::{Scalar, Tensor};

/// One square glyph bitmap: `[H, W, 1]`, ink 1.0, background 0.0.
#[derive(Clone, Debug, PartialEq)]
pub struct GlyphImage {
    pub codepoint: char,
    pub pixels: Tensor<f32>,
}

impl GlyphImage {
    pub fn new(codepoint: char, pixels: Tensor<f32>) -> Result<Self> {
        match pixels.shape() {
            &[h, w, 1] if h == w => {}
            s => {
                return Err(Error::Corpus(format!(
                    "{}: glyph must be square [H, H, 1], got {s:?}",
                    codepoint_name(codepoint)
                )))
            }
        }
        if pixels.data().iter().any(|v| !(0.0..=1.0).contains(v)) {
            return Err(Error::Corpus(format!(
                "{}: pixel values must lie in [0, 1]",
                codepoint_name(codepoint)
            )));
        }
        Ok(Self { codepoint, pixels })
    }

    pub fn size(&self) -> usize {
        self.pixels.shape()[0]
    }

    pub fn load(path: &Path) -> Result<Self> {
        let codepoint = parse_file_name(path)?;
        Self::new(codepoint, pgm::load_pgm_file(path)?)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct GlyphPair {
    pub codepoint: char,
    /// Source-font rendering (network input).
    pub image_a: GlyphImage,
    /// Target-font rendering (training target).
    pub image_b: GlyphImage,
}

impl GlyphPair {
    pub fn new(image_a: GlyphImage, image_b: GlyphImage) -> Result<Self> {
        if image_a.codepoint != image_b.codepoint {
            return Err(Error::Corpus(format!(
                "cannot pair {} with {}",
                codepoint_name(image_a.codepoint),
                codepoint_name(image_b.codepoint)
            )));
        }
        if image_a.size() != image_b.size() {
            let (a, b) = (image_a.size(), image_b.size());
            return Err(Error::Corpus(format!(
                "{}: font A glyph is {a}x{a} but font B glyph is {b}x{b}",
                codepoint_name(image_a.codepoint),
            )));
        }
        Ok(Self {
            codepoint: image_a.codepoint,
            image_a,
            image_b,
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Side {
    A,
    B,
}

/// A glyph present in only one of the two directories.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Skipped {
    pub codepoint: char,
    pub only_in: Side,
    pub path: PathBuf,
}

impl fmt::Display for Skipped {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let side = match self.only_in {
            Side::A => "font A",
            Side::B => "font B",
        };
        write!(f, "{} only in {side} ({})", codepoint_name(self.codepoint), self.path.display())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct PairedCorpus {
    /// Sorted by codepoint, no duplicates.
    pub pairs: Vec<GlyphPair>,
    pub image_size: usize,
    pub skipped: Vec<Skipped>,
}

impl PairedCorpus {
    pub fn from_pairs(mut pairs: Vec<GlyphPair>) -> Result<Self> {
        let first = pairs
            .first()
            .ok_or_else(|| Error::Corpus("corpus is empty: no glyph appears in both fonts".into()))?;
        let image_size = first.image_a.size();
        pairs.sort_by_key(|p| p.codepoint);
        for w in pairs.windows(2) {
            if w[0].codepoint == w[1].codepoint {
                return Err(Error::Corpus(format!("duplicate glyph {}", codepoint_name(w[0].codepoint))));
            }
        }
        if let Some(p) = pairs.iter().find(|p| p.image_a.size() != image_size) {
            return Err(Error::Corpus(format!(
                "{}: glyph size {} differs from corpus size {image_size}",
                codepoint_name(p.codepoint),
                p.image_a.size()
            )));
        }
        Ok(Self {
            pairs,
            image_size,
            skipped: Vec::new(),
        })
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn codepoints(&self) -> Vec<char> {
        self.pairs.iter().map(|p| p.codepoint).collect()
    }

    pub fn get(&self, codepoint: char) -> Option<&GlyphPair> {
        self.pairs
            .binary_search_by_key(&codepoint, |p| p.codepoint)
            .ok()
            .map(|i| &self.pairs[i])
    }

    /// Splits off the pairs for `held_out`, returning (rest, held out).
    pub fn hold_out(&self, held_out: &[char]) -> Result<(Self, Vec<GlyphPair>)> {
        let (out, rest): (Vec<_>, Vec<_>) = self.pairs.iter().cloned().partition(|p| held_out.contains(&p.codepoint));
        if out.len() != held_out.len() {
            return Err(Error::Corpus("held-out glyph missing from corpus".into()));
        }
        Ok((Self::from_pairs(rest)?, out))
    }

    /// Every glyph resampled bilinearly to `size` x `size` (pixel centers
    /// aligned, edges clamped).
    pub fn resized(&self, size: usize) -> Result<Self> {
        if size == 0 {
            return Err(Error::Config("image size must be positive".into()));
        }
        if size == self.image_size {
            return Ok(self.clone());
        }
        let resize = |g: &GlyphImage| GlyphImage::new(g.codepoint, resample(&g.pixels, size));
        let pairs = self
            .pairs
            .iter()
            .map(|p| GlyphPair::new(resize(&p.image_a)?, resize(&p.image_b)?))
            .collect::<Result<Vec<_>>>()?;
        let mut out = Self::from_pairs(pairs)?;
        out.skipped = self.skipped.clone();
        Ok(out)
    }

    /// Pixel-wise mean of every font-B target.
    pub fn mean_target(&self) -> Tensor<f32> {
        let n = self.pairs.len() as f64;
        let mut acc = vec![0f64; self.image_size * self.image_size];
        for p in &self.pairs {
            for (a, &v) in acc.iter_mut().zip(p.image_b.pixels.data()) {
                *a += v as f64;
            }
        }
        let data = acc.into_iter().map(|a| (a / n) as f32).collect();
        Tensor::from_parts(vec![self.image_size, self.image_size, 1], data)
    }
}

fn resample(src: &Tensor<f32>, size: usize) -> Tensor<f32> {
    let n = src.shape()[0];
    let scale = n as f64 / size as f64;
    let coord = |i: usize| {
        let x = ((i as f64 + 0.5) * scale - 0.5).clamp(0.0, (n - 1) as f64);
        let lo = x.floor() as usize;
        (lo, (lo + 1).min(n - 1), x - lo as f64)
    };
    let px = |y: usize, x: usize| src.data()[y * n + x] as f64;
    let mut data = Vec::with_capacity(size * size);
    for i in 0..size {
        let (y0, y1, fy) = coord(i);
        for j in 0..size {
            let (x0, x1, fx) = coord(j);
            let top = px(y0, x0) * (1.0 - fx) + px(y0, x1) * fx;
            let bottom = px(y1, x0) * (1.0 - fx) + px(y1, x1) * fx;
            data.push((top * (1.0 - fy) + bottom * fy).clamp(0.0, 1.0) as f32);
        }
    }
    Tensor::from_parts(vec![size, size, 1], data)
}

/// `U+XXXX` with at least four uppercase hex digits.
pub fn codepoint_name(c: char) -> String {
    format!("U+{:04X}", c as u32)
}

/// Parses the canonical `U+XXXX.pgm` file name (4 to 6 uppercase hex
/// digits, no superfluous leading zeros beyond four digits).
pub fn parse_codepoint_file_name(name: &str) -> Option<char> {
    let digits = name.strip_prefix("U+")?.strip_suffix(".pgm")?;
    if !(4..=6).contains(&digits.len()) || !digits.bytes().all(|b| b.is_ascii_digit() || (b'A'..=b'F').contains(&b)) {
        return None;
    }
    let c = char::from_u32(u32::from_str_radix(digits, 16).ok()?)?;
    (codepoint_name(c)[2..] == *digits).then_some(c)
}

fn parse_file_name(path: &Path) -> Result<char> {
    path.file_name()
        .and_then(|n| n.to_str())
        .and_then(parse_codepoint_file_name)
        .ok_or_else(|| Error::Corpus(format!("{}: file name is not U+XXXX.pgm", path.display())))
}

fn scan(dir: &Path) -> Result<BTreeMap<char, PathBuf>> {
    let entries = std::fs::read_dir(dir).map_err(|e| Error::io(dir, e))?;
    let mut out = BTreeMap::new();
    for entry in entries {
        let entry = entry.map_err(|e| Error::io(dir, e))?;
        let path = entry.path();
        let hidden = entry.file_name().to_str().is_some_and(|n| n.starts_with('.'));
        if hidden || path.is_dir() {
            continue;
        }
        let c = parse_file_name(&path)?;
        out.insert(c, path);
    }
    Ok(out)
}

/// Pairs every glyph present in both directories. Glyphs found in only one
/// directory are listed in [`PairedCorpus::skipped`].
pub fn load_paired_corpus(dir_a: &Path, dir_b: &Path) -> Result<PairedCorpus> {
    let a = scan(dir_a)?;
    let b = scan(dir_b)?;
    let mut skipped = Vec::new();
    for (c, p) in &a {
        if !b.contains_key(c) {
            skipped.push(Skipped {
                codepoint: *c,
                only_in: Side::A,
                path: p.clone(),
            });
        }
    }
    for (c, p) in &b {
        if !a.contains_key(c) {
            skipped.push(Skipped {
                codepoint: *c,
                only_in: Side::B,
                path: p.clone(),
            });
        }
    }
    skipped.sort_by_key(|s| s.codepoint);
    let mut pairs = Vec::new();
    for (c, pa) in &a {
        let Some(pb) = b.get(c) else { continue };
        pairs.push(GlyphPair::new(GlyphImage::load(pa)?, GlyphImage::load(pb)?)?);
    }
    let mut corpus = PairedCorpus::from_pairs(pairs)?;
    corpus.skipped = skipped;
    Ok(corpus)
}

/// Stacked inputs and targets of one mini-batch.
#[derive(Clone, Debug, PartialEq)]
pub struct Batch<T> {
    pub codepoints: Vec<char>,
    /// `[b, H, W, 1]` font-A glyphs.
    pub inputs: Tensor<T>,
    /// `[b, H, W, 1]` font-B glyphs.
    pub targets: Tensor<T>,
}

/// Shuffles the corpus with `rng` and cuts it into consecutive batches of
/// `batch_size`; the last batch holds the remainder.
pub fn make_batches<T: Scalar>(corpus: &PairedCorpus, batch_size: usize, rng: &mut Rng) -> Result<Vec<Batch<T>>> {
    if corpus.is_empty() {
        return Err(Error::Corpus("corpus is empty".into()));
    }
    if batch_size == 0 {
        return Err(Error::Config("batch size must be at least 1".into()));
    }
    let mut order: Vec<usize> = (0..corpus.len()).collect();
    rng.shuffle(&mut order);
    order
        .chunks(batch_size)
        .map(|chunk| {
            let a: Vec<Tensor<T>> = chunk.iter().map(|&i| corpus.pairs[i].image_a.pixels.cast()).collect();
            let b: Vec<Tensor<T>> = chunk.iter().map(|&i| corpus.pairs[i].image_b.pixels.cast()).collect();
            Ok(Batch {
                codepoints: chunk.iter().map(|&i| corpus.pairs[i].codepoint).collect(),
                inputs: Tensor::stack(&a.iter().collect::<Vec<_>>())?,
                targets: Tensor::stack(&b.iter().collect::<Vec<_>>())?,
            })
        })
        .collect()
}
