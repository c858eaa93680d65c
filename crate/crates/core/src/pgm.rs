//! Binary PGM (`P5`, maxval 255) reading and writing.
//!
//! Pixels map to `[0, 1]` as `v / 255`; writing uses `floor(v * 255 + 0.5)`.
//! The canonical header written here is `P5\n<w> <h>\n255\n`, and
//! `save_pgm(load_pgm(bytes))` reproduces any file that uses it.

use std::path::Path;

use crate::error::{Error, FormatError, Result};
use crate::tensor::Tensor;

const MAX_SIDE: usize = 1 << 15;

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl Cursor<'_> {
    fn skip_space_and_comments(&mut self) {
        while let Some(&b) = self.bytes.get(self.pos) {
            if b == b'#' {
                while self.bytes.get(self.pos).is_some_and(|&c| c != b'\n' && c != b'\r') {
                    self.pos += 1;
                }
            } else if b.is_ascii_whitespace() {
                self.pos += 1;
            } else {
                break;
            }
        }
    }

    fn number(&mut self, what: &str) -> Result<usize> {
        self.skip_space_and_comments();
        let start = self.pos;
        while self.bytes.get(self.pos).is_some_and(u8::is_ascii_digit) {
            self.pos += 1;
        }
        if start == self.pos {
            return Err(if self.pos >= self.bytes.len() {
                Error::format(FormatError::Truncated, format!("header ends before {what}"))
            } else {
                Error::format(FormatError::BadHeader, format!("{what} is not a number"))
            });
        }
        std::str::from_utf8(&self.bytes[start..self.pos])
            .ok()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| Error::format(FormatError::BadHeader, format!("{what} out of range")))
    }
}

/// Decodes a binary PGM into a `[H, W, 1]` tensor with values in `[0, 1]`.
pub fn load_pgm(bytes: &[u8]) -> Result<Tensor<f32>> {
    match bytes {
        [b'P', b'5', ..] => {}
        [b'P', b'1'..=b'7', ..] => {
            return Err(Error::format(
                FormatError::UnsupportedFormat,
                format!("netpbm type {} is not supported, only binary PGM (P5)", bytes[1] as char),
            ))
        }
        [b'P'] | [] => return Err(Error::format(FormatError::Truncated, "stream ends inside the magic number")),
        _ => return Err(Error::format(FormatError::BadMagic, "not a PGM file")),
    }
    let mut c = Cursor { bytes, pos: 2 };
    if !c.bytes.get(2).is_some_and(|b| b.is_ascii_whitespace() || *b == b'#') {
        return Err(Error::format(FormatError::BadMagic, "not a PGM file"));
    }
    let width = c.number("width")?;
    let height = c.number("height")?;
    let maxval = c.number("maxval")?;
    if width == 0 || height == 0 {
        return Err(Error::format(FormatError::BadHeader, format!("zero dimension {width}x{height}")));
    }
    if width > MAX_SIDE || height > MAX_SIDE {
        return Err(Error::format(FormatError::BadHeader, format!("dimension {width}x{height} too large")));
    }
    if maxval != 255 {
        return Err(Error::format(
            FormatError::UnsupportedFormat,
            format!("maxval {maxval}, only 255 is supported"),
        ));
    }
    match c.bytes.get(c.pos) {
        Some(b) if b.is_ascii_whitespace() => c.pos += 1,
        Some(_) => return Err(Error::format(FormatError::BadHeader, "no whitespace after maxval")),
        None => return Err(Error::format(FormatError::Truncated, "no pixel data")),
    }
    let payload = &bytes[c.pos..];
    let n = width * height;
    if payload.len() < n {
        return Err(Error::format(
            FormatError::Truncated,
            format!("payload has {} bytes, expected {n}", payload.len()),
        ));
    }
    if payload.len() > n {
        return Err(Error::format(
            FormatError::SizeMismatch,
            format!("{} bytes after the payload", payload.len() - n),
        ));
    }
    let data = payload.iter().map(|&v| v as f32 / 255.0).collect();
    Tensor::from_vec(&[height, width, 1], data)
}

/// Quantizes one value in `[0, 1]` to a byte, rounding half up.
pub fn quantize(v: f64) -> Option<u8> {
    if !(0.0..=1.0).contains(&v) {
        return None;
    }
    Some((v * 255.0 + 0.5).floor().min(255.0) as u8)
}

/// Encodes a `[H, W]` or `[H, W, 1]` tensor with values in `[0, 1]`.
pub fn save_pgm<T: crate::Scalar>(pixels: &Tensor<T>) -> Result<Vec<u8>> {
    let (h, w) = match pixels.shape() {
        &[h, w] | &[h, w, 1] => (h, w),
        s => return Err(Error::Shape(format!("expected [H, W, 1] pixels, got {s:?}"))),
    };
    let mut out = format!("P5\n{w} {h}\n255\n").into_bytes();
    out.reserve(h * w);
    for (i, &v) in pixels.data().iter().enumerate() {
        let b = quantize(v.as_f64()).ok_or_else(|| {
            Error::format(
                FormatError::BadValue,
                format!("pixel {i} = {v} is outside [0, 1]"),
            )
        })?;
        out.push(b);
    }
    Ok(out)
}

pub fn load_pgm_file(path: &Path) -> Result<Tensor<f32>> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    load_pgm(&bytes).map_err(|e| match e {
        Error::Format { kind, detail } => Error::format(kind, format!("{}: {detail}", path.display())),
        other => other,
    })
}

pub fn save_pgm_file<T: crate::Scalar>(pixels: &Tensor<T>, path: &Path) -> Result<()> {
    let bytes = save_pgm(pixels)?;
    std::fs::write(path, bytes).map_err(|e| Error::io(path, e))
}
