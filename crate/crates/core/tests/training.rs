use lexattr_core::model::{evaluate, init_model, train, Confusion, ModelConfig};
use lexattr_core::synthetic::{binary_corpus, multiple_choice_corpus};
use lexattr_core::tokenizer::DEFAULT_MAX_TOKENS;

#[test]
fn separable_binary_corpus_reaches_high_f1() {
    let corpus = binary_corpus(600, 200, 17);
    let encode = |xs: &[lexattr_core::model::Example]| {
        xs.iter()
            .map(|e| e.encode(&corpus.vocab, DEFAULT_MAX_TOKENS))
            .collect::<Vec<_>>()
    };
    let (train_set, test_set) = (encode(&corpus.train), encode(&corpus.test));
    let config = ModelConfig::binary(corpus.vocab.len());
    let model = init_model(&config).unwrap();
    let out = train(&model, &train_set, &config).unwrap();
    assert!(out.loss_trace.last() < out.loss_trace.first(), "{:?}", out.loss_trace);

    let eval = evaluate(&out.model, &test_set).unwrap();
    let f1 = eval.f1.unwrap();
    eprintln!("f1 {f1}, accuracy {}, loss {:?}", eval.accuracy, out.loss_trace);
    assert!(f1 >= 0.95, "f1 {f1}");

    // F1 recomputed from raw counts.
    let pairs = eval
        .predictions
        .iter()
        .zip(&test_set)
        .map(|(p, e)| (p.predicted_class, e.label));
    let (mut tp, mut fp, mut fneg) = (0, 0, 0);
    for (p, l) in pairs.clone() {
        match (p, l) {
            (1, 1) => tp += 1,
            (1, 0) => fp += 1,
            (0, 1) => fneg += 1,
            _ => {}
        }
    }
    let expected = 2.0 * tp as f64 / (2 * tp + fp + fneg) as f64;
    assert_eq!(f1, expected);
    assert_eq!(eval.confusion, Some(Confusion::from_pairs(pairs)));
}

#[test]
fn multiple_choice_corpus_beats_chance() {
    let corpus = multiple_choice_corpus(600, 200, 3);
    let encode = |xs: &[lexattr_core::model::Example]| {
        xs.iter()
            .map(|e| e.encode(&corpus.vocab, DEFAULT_MAX_TOKENS))
            .collect::<Vec<_>>()
    };
    let (train_set, test_set) = (encode(&corpus.train), encode(&corpus.test));
    let mut config = ModelConfig::multiple_choice(corpus.vocab.len());
    config.epochs = 20;
    let model = init_model(&config).unwrap();
    let out = train(&model, &train_set, &config).unwrap();
    let eval = evaluate(&out.model, &test_set).unwrap();
    eprintln!("accuracy {}, loss {:?}", eval.accuracy, out.loss_trace);
    assert!(eval.f1.is_none());
    assert!(eval.accuracy > 0.4, "accuracy {}", eval.accuracy);
}
