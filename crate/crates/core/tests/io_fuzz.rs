//! Model-file fuzzing: random configurations roundtrip bit for bit, and
//! damaged streams are rejected with a format error.

mod common;

use common::fuzz::fuzz_case;
use vgsn_core::model::io::{load_model, save_model};
use vgsn_core::model::Variant;
use vgsn_core::{Model, ModelConfig, Rng};

#[test]
fn roundtrip_and_corruption_fuzz() {
    let mut rng = Rng::new(2024);
    for i in 0..1000 {
        if let Some(problem) = fuzz_case(&mut rng) {
            panic!("case {i}: {problem}");
        }
    }
}

#[test]
fn random_garbage_never_panics() {
    let mut rng = Rng::new(99);
    for _ in 0..2000 {
        let n = rng.below_or_eq(200) as usize;
        let mut bytes: Vec<u8> = (0..n).map(|_| rng.next_u64() as u8).collect();
        if rng.uniform() < 0.5 {
            let header = b"VGSN-MODEL\nversion 1\n";
            bytes.splice(0..0, header.iter().copied());
        }
        assert!(load_model::<f32>(&bytes).is_err());
    }
}

#[test]
fn f64_models_roundtrip_through_f32_storage() {
    let config = ModelConfig::for_image(Variant::Vgsn, 16, 2).unwrap();
    let model = Model::<f64>::new(config, 3).unwrap();
    let back = load_model::<f64>(&save_model(&model).unwrap()).unwrap();
    for (a, b) in model.params.tensors().iter().zip(back.params.tensors()) {
        for (x, y) in a.data().iter().zip(b.data()) {
            assert_eq!(*x as f32, *y as f32);
        }
    }
}
