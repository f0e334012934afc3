use lexattr_core::model::{Classifier, EncodedExample, Example, ModelConfig, TaskKind, NUM_CHOICES};
use lexattr_core::tokenizer::Vocabulary;
use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const H: f64 = 1e-6;

/// `|a − n| / max(|a|, |n|, 1e-4)`.
fn rel_err(a: f64, n: f64) -> f64 {
    (a - n).abs() / a.abs().max(n.abs()).max(1e-4)
}

fn vocab() -> Vocabulary {
    Vocabulary::from_tokens(["[PAD]", "[UNK]", "[CLS]", "[SEP]", "a", "b", "c", "d", "e", "f"]).unwrap()
}

fn random_text(rng: &mut ChaCha8Rng) -> String {
    let words = ["a", "b", "c", "d", "e", "f", "zzz"];
    let n = rng.random_range(1..6);
    (0..n).map(|_| words[rng.random_range(0..words.len())]).collect::<Vec<_>>().join(" ")
}

fn random_case(rng: &mut ChaCha8Rng) -> (Classifier, EncodedExample) {
    let v = vocab();
    let kind = if rng.random_bool(0.5) {
        TaskKind::Binary
    } else {
        TaskKind::MultipleChoice
    };
    let mut c = ModelConfig::for_task(kind, v.len());
    c.embed_dim = rng.random_range(1..7);
    c.hidden_dim = rng.random_range(1..9);
    c.seed = rng.random();
    let mut m = Classifier::init(&c).unwrap();
    m.scale_parameters(rng.random_range(1.0..30.0));
    let ex = match kind {
        TaskKind::Binary => Example::binary("g", random_text(rng), rng.random_range(0..2)),
        TaskKind::MultipleChoice => Example::multiple_choice(
            "g",
            random_text(rng),
            (0..NUM_CHOICES).map(|_| random_text(rng)).collect(),
            rng.random_range(0..NUM_CHOICES),
        ),
    }
    .unwrap()
    .encode(&v, 512);
    (m, ex)
}

fn check_parameters(m: &Classifier, ex: &EncodedExample) -> f64 {
    let (_, grads) = m.loss_and_gradients(ex).unwrap();
    let analytic = [
        grads.dense_embedding(m.config()),
        grads.w1.clone(),
        grads.b1.clone().insert_axis(ndarray::Axis(0)),
        grads.w2.clone(),
        grads.b2.clone().insert_axis(ndarray::Axis(0)),
    ];
    let mut worst: f64 = 0.0;
    let mut probe = m.clone();
    for (t, a) in analytic.iter().enumerate() {
        for (i, a) in a.iter().enumerate() {
            let orig = probe.parameters()[t].1[i];
            probe.parameters_mut()[t].1[i] = orig + H;
            let up = probe.loss(ex).unwrap();
            probe.parameters_mut()[t].1[i] = orig - H;
            let down = probe.loss(ex).unwrap();
            probe.parameters_mut()[t].1[i] = orig;
            worst = worst.max(rel_err(*a, (up - down) / (2.0 * H)));
        }
    }
    worst
}

fn check_inputs(m: &Classifier, ex: &EncodedExample, target: usize) -> f64 {
    let x = m.input_embeddings(&ex.input).unwrap();
    let layout = ex.input.layout();
    let (_, g) = m.target_probability_gradient(x.view(), &layout, target).unwrap();
    let mut worst: f64 = 0.0;
    let mut xp: Array2<f64> = x.clone();
    for ((r, c), a) in g.indexed_iter() {
        let orig = xp[[r, c]];
        xp[[r, c]] = orig + H;
        let up = m.target_probability(xp.view(), &layout, target).unwrap();
        xp[[r, c]] = orig - H;
        let down = m.target_probability(xp.view(), &layout, target).unwrap();
        xp[[r, c]] = orig;
        worst = worst.max(rel_err(*a, (up - down) / (2.0 * H)));
    }
    worst
}

#[test]
fn analytic_gradients_match_central_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    for case in 0..50 {
        let (m, ex) = random_case(&mut rng);
        let p = check_parameters(&m, &ex);
        assert!(p <= 1e-5, "case {case}: parameter rel err {p}");
        let classes = match m.kind() {
            TaskKind::Binary => 2,
            TaskKind::MultipleChoice => NUM_CHOICES,
        };
        let target = rng.random_range(0..classes);
        let i = check_inputs(&m, &ex, target);
        assert!(i <= 1e-5, "case {case}: input rel err {i}");
    }
}

#[test]
fn unknown_word_rows_get_gradient() {
    // "zzz" maps to [UNK], a regular non-special row that takes part in pooling.
    let v = vocab();
    let m = Classifier::init(&ModelConfig::binary(v.len())).unwrap();
    let ex = Example::binary("u", "zzz a", 1).unwrap().encode(&v, 512);
    let (_, g) = m.loss_and_gradients(&ex).unwrap();
    assert!(g.embedding.contains_key(&v.unk_id()));
    assert!(!g.embedding.contains_key(&v.id("[CLS]").unwrap()));
}
