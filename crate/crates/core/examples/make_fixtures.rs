//! Renders the two synthetic fixture fonts under `fixtures/`.
//!
//! Font A draws each glyph skeleton with thin upright strokes, font B with
//! bold strokes sheared to the right. Both are 32x32, ink 1.0 on 0.0.
//!
//! ```text
//! cargo run -p vgsn-core --example make_fixtures -- fixtures
//! ```

use std::path::{Path, PathBuf};

use vgsn_core::corpus::codepoint_name;
use vgsn_core::pgm::save_pgm_file;
use vgsn_core::Tensor;

const SIZE: usize = 32;

type Segment = ((f64, f64), (f64, f64));

/// Stroke skeletons on a 32x32 canvas, y pointing down.
fn skeleton(c: char) -> Vec<Segment> {
    let (l, r, t, m, b) = (9.0, 23.0, 6.0, 16.0, 26.0);
    let cx = 16.0;
    match c {
        'E' => vec![((l, t), (l, b)), ((l, t), (r, t)), ((l, m), (r - 3.0, m)), ((l, b), (r, b))],
        'F' => vec![((l, t), (l, b)), ((l, t), (r, t)), ((l, m), (r - 3.0, m))],
        'H' => vec![((l, t), (l, b)), ((r, t), (r, b)), ((l, m), (r, m))],
        'L' => vec![((l, t), (l, b)), ((l, b), (r, b))],
        'T' => vec![((l, t), (r, t)), ((cx, t), (cx, b))],
        _ => Vec::new(),
    }
}

fn distance(p: (f64, f64), (a, b): Segment) -> f64 {
    let (dx, dy) = (b.0 - a.0, b.1 - a.1);
    let len2 = dx * dx + dy * dy;
    let t = if len2 == 0.0 {
        0.0
    } else {
        (((p.0 - a.0) * dx + (p.1 - a.1) * dy) / len2).clamp(0.0, 1.0)
    };
    let (qx, qy) = (a.0 + t * dx, a.1 + t * dy);
    ((p.0 - qx).powi(2) + (p.1 - qy).powi(2)).sqrt()
}

/// Coverage of strokes of half-width `radius`, with one pixel of
/// anti-aliasing. `shear` slants x by `shear * (centre - y)`.
fn render(c: char, radius: f64, shear: f64) -> Tensor<f32> {
    let strokes = skeleton(c);
    let mut px = Vec::with_capacity(SIZE * SIZE);
    for y in 0..SIZE {
        for x in 0..SIZE {
            let (fx, fy) = (x as f64 + 0.5, y as f64 + 0.5);
            let p = (fx - shear * (16.0 - fy), fy);
            let d = strokes.iter().map(|&s| distance(p, s)).fold(f64::INFINITY, f64::min);
            let v = (radius + 0.5 - d).clamp(0.0, 1.0);
            // Snap to the 8-bit grid so the files load back exactly.
            px.push(((v * 255.0).round() / 255.0) as f32);
        }
    }
    Tensor::from_vec(&[SIZE, SIZE, 1], px).expect("valid glyph")
}

pub const GLYPHS: [char; 5] = ['E', 'F', 'H', 'L', 'T'];

fn write_font(dir: &Path, radius: f64, shear: f64) -> Result<(), Box<dyn std::error::Error>> {
    std::fs::create_dir_all(dir)?;
    for c in GLYPHS {
        let path = dir.join(format!("{}.pgm", codepoint_name(c)));
        save_pgm_file(&render(c, radius, shear), &path)?;
    }
    Ok(())
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let root = std::env::args_os().nth(1).map_or_else(|| PathBuf::from("fixtures"), PathBuf::from);
    write_font(&root.join("font_a"), 0.8, 0.0)?;
    write_font(&root.join("font_b"), 2.2, 0.25)?;
    println!("wrote {} glyph pairs to {}", GLYPHS.len(), root.display());
    Ok(())
}
