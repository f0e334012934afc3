use lexattr_core::attribution::{
    attribute, attribute_dataset, integrate_path, AttributionConfig, AttributionRequest, LinearScorer,
    TargetProbability,
};
use lexattr_core::model::{Classifier, Example, InputLayout, ModelConfig, Segment, TaskKind};
use lexattr_core::tokenizer::Vocabulary;
use ndarray::Array2;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Small MLP with parameters scaled up so the target probability curves
/// noticeably along the path.
fn reference_mlp(seed: u64, kind: TaskKind) -> Classifier {
    let mut c = ModelConfig::for_task(kind, 16);
    c.embed_dim = 6;
    c.hidden_dim = 8;
    c.seed = seed;
    let mut m = Classifier::init(&c).unwrap();
    m.scale_parameters(30.0);
    m
}

fn binary_layout(rows: usize) -> InputLayout {
    InputLayout {
        kind: TaskKind::Binary,
        segments: vec![Segment {
            rows: 0..rows,
            content: (1..rows - 1).collect(),
        }],
    }
}

fn random_input(rng: &mut ChaCha8Rng, rows: usize, dim: usize, scale: f64) -> Array2<f64> {
    Array2::from_shape_fn((rows, dim), |_| rng.random_range(-scale..scale))
}

/// Midpoint Riemann sum of the gradient along the path, times (x − x′).
fn dense_riemann(f: &TargetProbability, x: &Array2<f64>, baseline: &Array2<f64>, n: usize) -> Array2<f64> {
    let diff = x - baseline;
    let mut acc = Array2::<f64>::zeros(x.dim());
    for k in 0..n {
        let alpha = (k as f64 + 0.5) / n as f64;
        let point = baseline + &(&diff * alpha);
        let (_, g) = f
            .model
            .target_probability_gradient(point.view(), &f.layout, f.target)
            .unwrap();
        acc += &g;
    }
    diff * (acc / n as f64)
}

#[test]
fn trapezoid_matches_dense_riemann_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for seed in 0..3 {
        let m = reference_mlp(seed, TaskKind::Binary);
        let rows = 7;
        let x = random_input(&mut rng, rows, 6, 1.0);
        let baseline = Array2::zeros(x.dim());
        let f = TargetProbability {
            model: &m,
            layout: binary_layout(rows),
            target: 1,
        };
        let oracle = dense_riemann(&f, &x, &baseline, 100_000);
        let ig = integrate_path(&f, x.view(), baseline.view(), 50).unwrap();
        let max_gap = ig
            .per_dim
            .iter()
            .zip(oracle.iter())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        assert!(max_gap <= 1e-3, "seed {seed}: max element gap {max_gap}");
    }
}

#[test]
fn completeness_gap_shrinks_with_steps() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let m = reference_mlp(2, TaskKind::Binary);
    for _ in 0..20 {
        let rows = rng.random_range(3..12);
        let x = random_input(&mut rng, rows, 6, 1.0);
        let baseline = Array2::zeros(x.dim());
        let f = TargetProbability {
            model: &m,
            layout: binary_layout(rows),
            target: rng.random_range(0..2),
        };
        let gaps: Vec<f64> = [25, 50, 100, 200, 400]
            .iter()
            .map(|&s| integrate_path(&f, x.view(), baseline.view(), s).unwrap().completeness_gap())
            .collect();
        assert!(gaps[3] <= 1e-3, "{gaps:?}");
        for w in gaps.windows(2) {
            assert!(w[1] <= w[0] + 1e-9, "{gaps:?}");
        }
    }
}

#[test]
fn sensitivity_on_unused_position() {
    // A special token outside the pooled rows does not affect the output; if
    // it also equals the baseline its attribution is exactly zero.
    let m = reference_mlp(4, TaskKind::Binary);
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut x = random_input(&mut rng, 5, 6, 0.1);
    x.row_mut(0).fill(0.0);
    let baseline = Array2::zeros(x.dim());
    let f = TargetProbability {
        model: &m,
        layout: binary_layout(5),
        target: 0,
    };
    let ig = integrate_path(&f, x.view(), baseline.view(), 50).unwrap();
    assert!(ig.per_dim.row(0).iter().all(|v| *v == 0.0));
}

#[test]
fn dataset_statistics_match_two_pass_oracle() {
    let v = Vocabulary::from_tokens(["[PAD]", "[UNK]", "[CLS]", "[SEP]", "a", "b", "c", "d", "e"]).unwrap();
    let mut c = ModelConfig::binary(v.len());
    c.embed_dim = 4;
    c.hidden_dim = 6;
    let mut m = Classifier::init(&c).unwrap();
    m.scale_parameters(10.0);
    let words = ["a", "b", "c", "d", "e"];
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let data: Vec<_> = (0..400)
        .map(|i| {
            let n = rng.random_range(1..8);
            let text: Vec<&str> = (0..n).map(|_| words[rng.random_range(0..5)]).collect();
            Example::binary(i.to_string(), text.join(" "), rng.random_range(0..2))
                .unwrap()
                .encode(&v, 512)
        })
        .collect();
    let recs = attribute_dataset(&m, &data, &AttributionConfig::default()).unwrap();
    assert_eq!(recs.len(), 400);
    let sums: Vec<f64> = recs.iter().map(|r| r.as_ref().unwrap().scored.attribution_sum).collect();

    // Two-pass population statistics.
    let n = sums.len() as f64;
    let mean = sums.iter().sum::<f64>() / n;
    let var = sums.iter().map(|s| (s - mean).powi(2)).sum::<f64>() / n;

    let stats = lexattr_core::analytics::Summary::from_values(sums.iter().copied()).unwrap();
    assert!((stats.mean - mean).abs() <= 1e-12);
    assert!((stats.std - var.sqrt()).abs() <= 1e-12);
}

#[test]
fn request_errors() {
    let v = Vocabulary::from_tokens(["[PAD]", "[UNK]", "[CLS]", "[SEP]", "a"]).unwrap();
    let m = Classifier::init(&ModelConfig::binary(v.len())).unwrap();
    let ex = Example::binary("e", "a a", 1).unwrap().encode(&v, 512);
    assert!(attribute(&m, &AttributionRequest::new(&ex).with_steps(0)).is_err());
    let mut req = AttributionRequest::new(&ex);
    req.baseline = lexattr_core::attribution::Baseline::Custom(Array2::zeros((1, 1)));
    assert!(attribute(&m, &req).is_err());
}

fn matrix(rows: usize, dim: usize) -> impl Strategy<Value = Array2<f64>> {
    prop::collection::vec(-5.0f64..5.0, rows * dim)
        .prop_map(move |v| Array2::from_shape_vec((rows, dim), v).unwrap())
}

proptest! {
    #[test]
    fn linear_exactness(
        (w, x, b) in (1usize..6, 1usize..6).prop_flat_map(|(r, d)| (matrix(r, d), matrix(r, d), matrix(r, d))),
        steps in 1usize..64,
        bias in -3.0f64..3.0,
    ) {
        let f = LinearScorer { weights: w.clone(), bias };
        let ig = integrate_path(&f, x.view(), b.view(), steps).unwrap();
        let expected = (&x - &b) * &w;
        for (a, e) in ig.per_dim.iter().zip(expected.iter()) {
            prop_assert!((a - e).abs() <= 1e-9);
        }
        prop_assert!(ig.completeness_gap() <= 1e-9);
    }

    #[test]
    fn identical_input_and_baseline(x in matrix(3, 4), seed in 0u64..50) {
        let m = reference_mlp(seed, TaskKind::Binary);
        let mut x6 = Array2::zeros((3, 6));
        x6.slice_mut(ndarray::s![.., ..4]).assign(&x);
        let f = TargetProbability { model: &m, layout: binary_layout(3), target: 1 };
        let ig = integrate_path(&f, x6.view(), x6.view(), 7).unwrap();
        prop_assert!(ig.per_dim.iter().all(|v| *v == 0.0));
        prop_assert_eq!(ig.completeness_gap(), 0.0);
    }
}
