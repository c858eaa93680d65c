//! Seeded randomness: streams, moments and weight initialization.

use vgsn_core::model::Variant;
use vgsn_core::{Model, ModelConfig, Rng};

fn moments(v: &[f64]) -> (f64, f64) {
    let n = v.len() as f64;
    let m = v.iter().sum::<f64>() / n;
    (m, v.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / n)
}

#[test]
fn normal_moments() {
    let mut rng = Rng::new(5);
    let v: Vec<f64> = (0..200_000).map(|_| rng.normal()).collect();
    let (m, var) = moments(&v);
    assert!(m.abs() < 0.01, "{m}");
    assert!((var - 1.0).abs() < 0.02, "{var}");
}

#[test]
fn uniform_range_and_mean() {
    let mut rng = Rng::new(6);
    let v: Vec<f64> = (0..100_000).map(|_| rng.uniform()).collect();
    assert!(v.iter().all(|&x| (0.0..1.0).contains(&x)));
    let (m, var) = moments(&v);
    assert!((m - 0.5).abs() < 0.01);
    assert!((var - 1.0 / 12.0).abs() < 0.002);
}

#[test]
fn streams_are_independent_and_reproducible() {
    let draw = |mut r: Rng| (0..8).map(|_| r.next_u64()).collect::<Vec<_>>();
    assert_eq!(draw(Rng::new(1)), draw(Rng::new(1)));
    assert_ne!(draw(Rng::new(1)), draw(Rng::new(2)));
    assert_ne!(draw(Rng::with_stream(1, 0)), draw(Rng::with_stream(1, 1)));
    assert_ne!(draw(Rng::for_epoch(1, 1)), draw(Rng::for_epoch(1, 2)));
    assert_eq!(draw(Rng::for_epoch(3, 4)), draw(Rng::for_epoch(3, 4)));
}

#[test]
fn weights_follow_fan_in_scaling() {
    let config = ModelConfig::for_image(Variant::Vgsn, 32, 4).unwrap();
    let model = Model::<f64>::new(config, 0).unwrap();
    for (name, t) in model.params.named() {
        if name.ends_with(".kernel") || name.ends_with(".weight") {
            let shape = t.shape();
            if t.len() < 2000 {
                continue;
            }
            let fan_in: usize = shape[..shape.len() - 1].iter().product();
            let (m, var) = moments(t.data());
            let want = 2.0 / fan_in as f64;
            assert!(m.abs() < 4.0 * (want / t.len() as f64).sqrt() + 1e-12, "{name} mean {m}");
            assert!((var / want - 1.0).abs() < 0.15, "{name} var {var} want {want}");
        } else if name.ends_with(".gamma") {
            assert!(t.data().iter().all(|&v| v == 1.0));
        } else {
            assert!(t.data().iter().all(|&v| v == 0.0), "{name}");
        }
    }
    let again = Model::<f64>::new(model.config.clone(), 0).unwrap();
    assert_eq!(again, model);
}
