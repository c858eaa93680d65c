//! Latent sampling `z = mu + exp(sigma) * phi(eps)` against a 50-digit
//! reference evaluation (`tests/data/make_latent_oracle.py`).

use vgsn_core::autodiff::Tape;
use vgsn_core::model::vgsn::{gaussian_density, sample_latent, sample_latent_values};
use vgsn_core::model::LatentStats;
use vgsn_core::Tensor;

const ORACLE: &str = include_str!("data/latent_oracle.txt");

fn rows() -> Vec<[f64; 4]> {
    ORACLE
        .lines()
        .filter(|l| !l.starts_with('#'))
        .map(|l| {
            let v: Vec<f64> = l.split_whitespace().map(|x| x.parse().unwrap()).collect();
            [v[0], v[1], v[2], v[3]]
        })
        .collect()
}

fn column(rows: &[[f64; 4]], i: usize) -> Tensor<f64> {
    Tensor::from_vec(&[rows.len()], rows.iter().map(|r| r[i]).collect()).unwrap()
}

#[test]
fn matches_high_precision_reference() {
    let rows = rows();
    assert_eq!(rows.len(), 1000);
    let z = sample_latent_values(&column(&rows, 0), &column(&rows, 1), &column(&rows, 2)).unwrap();
    let worst = z.data().iter().zip(&rows).map(|(a, r)| (a - r[3]).abs()).fold(0.0, f64::max);
    assert!(worst <= 1e-12, "{worst}");
}

#[test]
fn tape_sampling_matches_values() {
    let rows = rows();
    let mut tape = Tape::<f64>::new();
    let mu = tape.param(column(&rows, 0));
    let sigma = tape.param(column(&rows, 1));
    let z = sample_latent(&mut tape, LatentStats { mu, sigma }, &column(&rows, 2)).unwrap();
    let worst = tape.value(z).unwrap().data().iter().zip(&rows).map(|(a, r)| (a - r[3]).abs()).fold(0.0, f64::max);
    assert!(worst <= 1e-12, "{worst}");
}

#[test]
fn vanishing_scale_limit() {
    let mu = Tensor::<f64>::from_slice(&[4], &[-3.0, 0.0, 0.5, 2.0]).unwrap();
    let sigma = Tensor::full(&[4], -20.0).unwrap();
    let eps = Tensor::from_slice(&[4], &[0.0, 1.0, -2.0, 0.3]).unwrap();
    let z = sample_latent_values(&mu, &sigma, &eps).unwrap();
    for (a, m) in z.data().iter().zip(mu.data()) {
        assert!((a - m).abs() < 1e-9);
        assert!(a - m > 0.0);
    }
}

#[test]
fn worked_examples() {
    assert!((gaussian_density(0.0f64) - 0.398_942_3).abs() < 1e-7);
    let scalar = |v: f64| Tensor::from_slice(&[1], &[v]).unwrap();
    let z = sample_latent_values(&scalar(0.0), &scalar(0.0), &scalar(0.0)).unwrap();
    assert!((z.data()[0] - 0.398_942_3).abs() < 1e-7);
    let z = sample_latent_values(&scalar(1.0), &scalar(2f64.ln()), &scalar(1.0)).unwrap();
    assert!((z.data()[0] - 1.483_941_449_038_286_7).abs() < 1e-12);
}

#[test]
fn shift_is_always_positive() {
    for r in rows() {
        let z = sample_latent_values(
            &Tensor::from_slice(&[1], &[r[0]]).unwrap(),
            &Tensor::from_slice(&[1], &[r[1]]).unwrap(),
            &Tensor::from_slice(&[1], &[r[2]]).unwrap(),
        )
        .unwrap();
        assert!(z.data()[0] > r[0] || r[1] < -30.0);
    }
}

#[test]
fn shape_mismatch_is_an_error() {
    let a = Tensor::<f64>::zeros(&[2]).unwrap();
    let b = Tensor::<f64>::zeros(&[3]).unwrap();
    assert!(sample_latent_values(&a, &a, &b).is_err());
}
