//! PGM codec and paired-corpus loading.

mod common;

use std::path::Path;

use vgsn_core::corpus::{load_paired_corpus, make_batches, GlyphImage, GlyphPair, PairedCorpus, Side};
use vgsn_core::pgm::{load_pgm, save_pgm, save_pgm_file};
use vgsn_core::{FormatError, Rng, Tensor};

#[test]
fn p5_example() {
    let mut bytes = b"P5\n2 2\n255\n".to_vec();
    bytes.extend_from_slice(&[0, 128, 255, 64]);
    let px = load_pgm(&bytes).unwrap();
    assert_eq!(px.shape(), &[2, 2, 1]);
    let want = [0.0, 128.0 / 255.0, 1.0, 64.0 / 255.0];
    for (a, b) in px.data().iter().zip(want) {
        assert_eq!(*a, b as f32);
    }
    assert!((px.data()[1] - 0.50196).abs() < 1e-5);
    assert_eq!(save_pgm(&px).unwrap(), bytes);
}

#[test]
fn pgm_errors() {
    let mut short = b"P5\n2 2\n255\n".to_vec();
    short.extend_from_slice(&[1, 2, 3]);
    assert_eq!(load_pgm(&short).unwrap_err().format_kind(), Some(FormatError::Truncated));
    let ascii = b"P2\n2 2\n255\n0 0 0 0\n";
    assert_eq!(load_pgm(ascii).unwrap_err().format_kind(), Some(FormatError::UnsupportedFormat));
    assert!(load_pgm(b"P5\n2 2\n15\n\0\0\0\0").is_err());
    assert!(load_pgm(b"P5\n0 2\n255\n").is_err());
    assert!(load_pgm(b"XY\n").is_err());
}

#[test]
fn pgm_comments_are_skipped() {
    let mut bytes = b"P5\n# made by hand\n1 1\n255\n".to_vec();
    bytes.push(200);
    assert_eq!(load_pgm(&bytes).unwrap().data(), &[200.0 / 255.0]);
}

#[test]
fn save_quantizes_half_up() {
    let px = Tensor::from_slice(&[1, 3, 1], &[0.5f64, 0.0, 1.0]).unwrap();
    let bytes = save_pgm(&px).unwrap();
    assert_eq!(&bytes[bytes.len() - 3..], &[128, 0, 255]);
    let zeros = Tensor::<f32>::zeros(&[2, 2, 1]).unwrap();
    assert!(save_pgm(&zeros).unwrap().ends_with(&[0, 0, 0, 0]));
    assert!(save_pgm(&Tensor::from_slice(&[1, 1, 1], &[1.5f32]).unwrap()).is_err());
}

#[test]
fn fixture_files_roundtrip_bytewise() {
    for dir in [common::font_a(), common::font_b()] {
        for entry in std::fs::read_dir(dir).unwrap() {
            let path = entry.unwrap().path();
            let bytes = std::fs::read(&path).unwrap();
            assert_eq!(save_pgm(&load_pgm(&bytes).unwrap()).unwrap(), bytes, "{}", path.display());
        }
    }
}

fn glyph(c: char, size: usize, fill: f32) -> GlyphImage {
    GlyphImage::new(c, Tensor::full(&[size, size, 1], fill).unwrap()).unwrap()
}

fn write(dir: &Path, name: &str, size: usize) {
    save_pgm_file(&Tensor::<f32>::zeros(&[size, size, 1]).unwrap(), &dir.join(name)).unwrap();
}

#[test]
fn pairs_by_intersection() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    write(a.path(), "U+6C38.pgm", 4);
    write(a.path(), "U+4E2D.pgm", 4);
    write(b.path(), "U+6C38.pgm", 4);
    let corpus = load_paired_corpus(a.path(), b.path()).unwrap();
    assert_eq!(corpus.codepoints(), vec!['\u{6C38}']);
    assert_eq!(corpus.skipped.len(), 1);
    assert_eq!(corpus.skipped[0].codepoint, '\u{4E2D}');
    assert_eq!(corpus.skipped[0].only_in, Side::A);
}

#[test]
fn size_mismatch_names_the_codepoint() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    write(a.path(), "U+6C38.pgm", 8);
    write(b.path(), "U+6C38.pgm", 4);
    let e = load_paired_corpus(a.path(), b.path()).unwrap_err();
    assert_eq!(e.category(), "corpus");
    assert!(e.to_string().contains("U+6C38"), "{e}");
}

#[test]
fn empty_intersection_is_an_error() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    write(a.path(), "U+0041.pgm", 4);
    write(b.path(), "U+0042.pgm", 4);
    let e = load_paired_corpus(a.path(), b.path()).unwrap_err();
    assert!(e.to_string().contains("empty"), "{e}");
}

#[test]
fn bad_file_name_is_an_error() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    write(a.path(), "letter-a.pgm", 4);
    write(b.path(), "U+0041.pgm", 4);
    assert!(load_paired_corpus(a.path(), b.path()).is_err());
}

#[test]
fn fixture_corpus_loads() {
    let corpus = load_paired_corpus(&common::font_a(), &common::font_b()).unwrap();
    assert_eq!(corpus.codepoints(), vec!['E', 'F', 'H', 'L', 'T']);
    assert_eq!(corpus.image_size, 32);
    assert!(corpus.skipped.is_empty());
}

fn synthetic(n: usize) -> PairedCorpus {
    let pairs = (0..n)
        .map(|i| {
            let c = char::from_u32(0x4E00 + i as u32).unwrap();
            GlyphPair::new(glyph(c, 4, 0.0), glyph(c, 4, 1.0)).unwrap()
        })
        .collect();
    PairedCorpus::from_pairs(pairs).unwrap()
}

#[test]
fn batch_sizes() {
    let sizes = |n: usize| -> Vec<usize> {
        make_batches::<f32>(&synthetic(n), 32, &mut Rng::new(0))
            .unwrap()
            .iter()
            .map(|b| b.codepoints.len())
            .collect()
    };
    assert_eq!(sizes(5), vec![5]);
    assert_eq!(sizes(70), vec![32, 32, 6]);
}

#[test]
fn batches_partition_the_corpus() {
    let corpus = synthetic(23);
    let mut orders = std::collections::HashSet::new();
    for seed in 0..100 {
        let batches = make_batches::<f64>(&corpus, 4, &mut Rng::new(seed)).unwrap();
        let mut seen: Vec<char> = batches.iter().flat_map(|b| b.codepoints.clone()).collect();
        orders.insert(seen.clone());
        seen.sort_unstable();
        assert_eq!(seen, corpus.codepoints());
        for b in &batches {
            assert_eq!(b.inputs.shape(), &[b.codepoints.len(), 4, 4, 1]);
            assert!(b.inputs.data().iter().all(|&v| v == 0.0));
            assert!(b.targets.data().iter().all(|&v| v == 1.0));
        }
    }
    assert!(orders.len() > 90, "shuffles barely vary: {}", orders.len());
    let again = make_batches::<f64>(&corpus, 4, &mut Rng::new(5)).unwrap();
    assert_eq!(again, make_batches::<f64>(&corpus, 4, &mut Rng::new(5)).unwrap());
}

#[test]
fn hold_out_splits() {
    let corpus = load_paired_corpus(&common::font_a(), &common::font_b()).unwrap();
    let (train, held) = corpus.hold_out(&['F']).unwrap();
    assert_eq!(train.codepoints(), vec!['E', 'H', 'L', 'T']);
    assert_eq!(held.len(), 1);
    assert_eq!(held[0].codepoint, 'F');
}
