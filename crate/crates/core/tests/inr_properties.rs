use contfit_core::inr::encoder::EncoderConfig;
use contfit_core::inr::{loss_and_grad, train, Architecture, InrModel, TrainConfig};
use contfit_core::{gen_samples, rect2d, RngSeed, SampleSet};
use proptest::prelude::*;
use rand::Rng;

/// Three levels at resolutions 4, 8, 16 with a 64-entry table: the first
/// level is dense, the other two hash.
fn small_arch() -> Architecture {
    Architecture {
        encoder: EncoderConfig { levels: 3, scale: 2.0, table_size_log2: 6, ..EncoderConfig::default() },
        hidden: vec![8],
    }
}

fn random_model(arch: &Architecture, seed: u64) -> InrModel {
    let base = InrModel::init(arch.clone(), 0.0, RngSeed(seed)).unwrap();
    let mut rng = RngSeed(seed ^ 0xabcd).rng();
    let params = (0..base.params().len()).map(|_| rng.random_range(-0.5..0.5)).collect();
    InrModel::from_params(arch.clone(), params).unwrap()
}

fn batch(seed: u64, n: usize) -> SampleSet {
    gen_samples(n, RngSeed(seed), |x, y| rect2d(x, y) + 0.3 * x - 0.1 * y).unwrap()
}

#[test]
fn encoder_levels_mix_dense_and_hashed() {
    let e = small_arch().encoder;
    assert!(e.is_dense(0));
    assert!(!e.is_dense(1) && !e.is_dense(2));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn analytic_gradient_matches_finite_differences(seed in 0u64..10_000, n in 1usize..=16, le in 0.0f64..0.1, lm in 0.0f64..0.1) {
        let arch = small_arch();
        let model = random_model(&arch, seed);
        let data = batch(seed + 1, n);
        let (_, grad) = loss_and_grad(&model, &data, le, lm).unwrap();
        let h = 1e-6;
        let loss_at = |k: usize, d: f64| {
            let mut p = model.params().to_vec();
            p[k] += d;
            let m = InrModel::from_params(arch.clone(), p).unwrap();
            loss_and_grad(&m, &data, le, lm).unwrap().0.total()
        };
        let mut diff = 0.0;
        let mut size = 0.0;
        for k in 0..grad.len() {
            let fd = (loss_at(k, h) - loss_at(k, -h)) / (2.0 * h);
            diff += (fd - grad[k]).powi(2);
            size += grad[k].powi(2);
        }
        prop_assert!(diff.sqrt() <= 1e-4 * size.sqrt(), "{} vs {}", diff.sqrt(), size.sqrt());
    }

    #[test]
    fn encoding_is_continuous_across_cell_edges(seed in 0u64..10_000, level in 0usize..3, cell in 1usize..4, y in 0.0f64..3.0) {
        let arch = small_arch();
        let model = random_model(&arch, seed);
        let res = arch.encoder.resolution(level);
        let x = 3.0 * cell as f64 / res as f64;
        let a = model.encode([x - 1e-9, y]);
        let b = model.encode([x + 1e-9, y]);
        let c = model.encode([y, x - 1e-9]);
        let d = model.encode([y, x + 1e-9]);
        for i in 0..a.len() {
            prop_assert!((a[i] - b[i]).abs() <= 1e-6);
            prop_assert!((c[i] - d[i]).abs() <= 1e-6);
        }
    }
}

#[test]
fn gradient_support_is_the_touched_vertices() {
    let arch = small_arch();
    let model = random_model(&arch, 5);
    let data = SampleSet::new(vec![[0.4, 0.4]], vec![1.0]).unwrap();
    let (_, grad) = loss_and_grad(&model, &data, 0.0, 0.0).unwrap();
    let enc = model.layout().encoder_len();
    let touched = grad[..enc].iter().filter(|g| **g != 0.0).count();
    // 3 levels x 4 corners x 2 features (no collisions at this point)
    assert!(touched <= 24 && touched > 0, "{touched}");
}

#[test]
fn batched_forward_equals_pointwise_forward() {
    let arch = Architecture::default();
    let model = random_model(&arch, 11);
    let pts: Vec<[f64; 2]> = batch(2, 300).coords().to_vec();
    let all = model.forward(&pts).unwrap();
    for (i, p) in pts.iter().enumerate().step_by(37) {
        assert_eq!(model.forward(&[*p]).unwrap()[0], all[i]);
    }
}

#[test]
fn zero_learning_rate_leaves_the_init_untouched() {
    let arch = small_arch();
    let cfg = TrainConfig { learning_rate: 0.0, iterations: 5, seed: RngSeed(4), lambda_enc: 0.01, ..TrainConfig::default() };
    let t = train(&batch(1, 64), &arch, &cfg).unwrap();
    let init = InrModel::init(arch, cfg.init_scale, cfg.seed).unwrap();
    assert_eq!(t.model.params(), init.params());
}

#[test]
fn training_is_seed_deterministic() {
    let arch = small_arch();
    let data = batch(3, 200);
    let cfg = TrainConfig { iterations: 30, seed: RngSeed(9), lambda_enc: 1e-3, lambda_mlp: 1e-6, ..TrainConfig::default() };
    let a = train(&data, &arch, &cfg).unwrap();
    let b = train(&data, &arch, &cfg).unwrap();
    assert_eq!(a.model.params(), b.model.params());
    assert_eq!(a.loss_trace, b.loss_trace);
    let c = train(&data, &arch, &TrainConfig { seed: RngSeed(10), ..cfg }).unwrap();
    assert_ne!(a.model.params(), c.model.params());
}

#[test]
fn training_reduces_the_loss() {
    let arch = small_arch();
    let cfg = TrainConfig { iterations: 200, seed: RngSeed(1), ..TrainConfig::default() };
    let t = train(&batch(8, 400), &arch, &cfg).unwrap();
    assert!(t.final_data_loss < 0.5 * t.data_trace[0]);
}

#[test]
fn coordinates_outside_the_domain_are_clamped() {
    let model = random_model(&small_arch(), 2);
    assert_eq!(model.encode([-0.3, 1.0]), model.encode([0.0, 1.0]));
    assert_eq!(model.encode([3.3, 3.2]), model.encode([3.0, 3.0]));
}
