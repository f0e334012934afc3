use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use lexattr_core::attribution::{attribute, AttributionRequest};
use lexattr_core::model::{init_model, ModelConfig};
use lexattr_core::synthetic::{binary_corpus, multiple_choice_corpus};
use lexattr_core::tokenizer::{build_queries, load_vocab, phrase_search, tokenize};

const VOCAB: &str = concat!(env!("CARGO_MANIFEST_DIR"), "/../../data/bert-base-uncased-vocab.txt");
const PHRASES: &str = concat!(env!("CARGO_MANIFEST_DIR"), "/../../data/dunn_phrases.txt");

const PARAGRAPH: &str = "The court of appeals reversed, holding that the earlier decision was \
    wrongly decided and should be overruled insofar as it conflicts with today's holding. \
    Petitioner's remaining arguments, including the interlocutory-appeal question, are unpersuasive.";

fn bench_tokenize(c: &mut Criterion) {
    let vocab = load_vocab(VOCAB).expect("vocab");
    c.bench_function("tokenize/paragraph", |b| b.iter(|| tokenize(black_box(PARAGRAPH), &vocab, true)));
}

fn bench_ig(c: &mut Criterion) {
    let corpus = binary_corpus(1, 1, 5);
    let config = ModelConfig::binary(corpus.vocab.len());
    let model = init_model(&config).unwrap();
    let ex = corpus.test[0].encode(&corpus.vocab, 512);
    for steps in [50, 200] {
        c.bench_function(&format!("ig/binary/{steps}"), |b| {
            b.iter(|| attribute(&model, &AttributionRequest::new(black_box(&ex)).with_steps(steps)).unwrap())
        });
    }
    let corpus = multiple_choice_corpus(1, 1, 5);
    let model = init_model(&ModelConfig::multiple_choice(corpus.vocab.len())).unwrap();
    let ex = corpus.test[0].encode(&corpus.vocab, 512);
    c.bench_function("ig/multiple_choice/50", |b| {
        b.iter(|| attribute(&model, &AttributionRequest::new(black_box(&ex)).with_steps(50)).unwrap())
    });
}

fn bench_phrases(c: &mut Criterion) {
    let vocab = load_vocab(VOCAB).expect("vocab");
    let phrases = lexattr_core::tokenizer::load_phrases(PHRASES).expect("phrases");
    let queries = build_queries(&phrases, &vocab).unwrap();
    let texts: Vec<_> = (0..1000).map(|_| tokenize(PARAGRAPH, &vocab, true)).collect();
    c.bench_function("phrases/71x1000", |b| {
        b.iter(|| {
            queries
                .iter()
                .map(|q| phrase_search(black_box(&texts), q).unwrap().len())
                .sum::<usize>()
        })
    });
}

criterion_group!(benches, bench_tokenize, bench_ig, bench_phrases);
criterion_main!(benches);
