//! Seeded generators for small legal-flavoured corpora with a known signal.
//!
//! The binary corpus plants words from one of two disjoint keyword sets in
//! filler text, so the label is recoverable from the bag of tokens. The
//! multiple-choice corpus pairs a topic cue in the context with the option
//! carrying that topic's holding cue.

use rand::seq::{IndexedRandom, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::model::{Example, NUM_CHOICES};
use crate::tokenizer::Vocabulary;

pub const POSITIVE_KEYWORDS: [&str; 10] = [
    "overrule",
    "overruled",
    "overruling",
    "disapprove",
    "disapproved",
    "abrogate",
    "abrogated",
    "recede",
    "repudiate",
    "supersede",
];

pub const NEGATIVE_KEYWORDS: [&str; 10] = [
    "affirm",
    "affirmed",
    "remand",
    "remanded",
    "cite",
    "cited",
    "accord",
    "follow",
    "followed",
    "distinguish",
];

const FILLER: [&str; 60] = [
    "the", "court", "held", "that", "a", "of", "in", "to", "and", "appeal", "statute", "plaintiff",
    "defendant", "judgment", "trial", "motion", "evidence", "claim", "rule", "law", "case",
    "decision", "opinion", "we", "is", "was", "this", "for", "on", "by", "with", "under",
    "section", "jury", "order", "record", "state", "federal", "district", "circuit", "counsel",
    "party", "contract", "liability", "damages", "review", "standard", "error", "issue",
    "question", "fact", "finding", "argument", "brief", "precedent", "holding", "relief",
    "petition", "agency", "interlocutory",
];

/// (context cue, holding cue) per topic of the multiple-choice corpus.
const TOPICS: [[&str; 2]; 6] = [
    ["negligence", "duty"],
    ["warrant", "suppression"],
    ["arbitration", "enforceable"],
    ["custody", "visitation"],
    ["copyright", "infringement"],
    ["sentencing", "guidelines"],
];

/// Words that exist only as WordPiece splits in the generated vocabulary.
const SPLIT_PIECES: [&str; 5] = ["inter", "##loc", "##utory", "##ly", "##s"];

#[derive(Debug, Clone)]
pub struct SyntheticCorpus {
    pub vocab: Vocabulary,
    pub train: Vec<Example>,
    pub test: Vec<Example>,
}

/// Vocabulary covering every word the generators emit.
pub fn vocabulary() -> Vocabulary {
    let mut tokens: Vec<String> = ["[PAD]", "[UNK]", "[CLS]", "[SEP]", "[MASK]", ".", ","]
        .iter()
        .map(|s| s.to_string())
        .collect();
    let words = FILLER
        .iter()
        .filter(|w| **w != "interlocutory")
        .chain(POSITIVE_KEYWORDS.iter())
        .chain(NEGATIVE_KEYWORDS.iter())
        .chain(TOPICS.iter().flatten())
        .chain(SPLIT_PIECES.iter());
    for w in words {
        if !tokens.iter().any(|t| t == w) {
            tokens.push(w.to_string());
        }
    }
    Vocabulary::from_tokens(tokens).expect("generated vocabulary is valid")
}

fn filler_words(rng: &mut ChaCha8Rng, min: usize, max: usize) -> Vec<&'static str> {
    let n = rng.random_range(min..=max);
    (0..n).map(|_| *FILLER.choose(rng).expect("non-empty")).collect()
}

fn sentence(mut words: Vec<&str>) -> String {
    let mut s = std::mem::take(&mut words).join(" ");
    s.push_str(" .");
    s
}

/// Binary corpus: label 1 examples carry one or two positive keywords, label
/// 0 examples one or two negative keywords, in 8–20 filler words.
pub fn binary_corpus(train: usize, test: usize, seed: u64) -> SyntheticCorpus {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut make = |i: usize| {
        let label = usize::from(rng.random_bool(0.5));
        let keywords: &[&str] = if label == 1 {
            &POSITIVE_KEYWORDS
        } else {
            &NEGATIVE_KEYWORDS
        };
        let mut words = filler_words(&mut rng, 8, 20);
        for _ in 0..rng.random_range(1..=2) {
            let at = rng.random_range(0..=words.len());
            words.insert(at, keywords.choose(&mut rng).expect("non-empty"));
        }
        Example::binary(format!("syn-{i:05}"), sentence(words), label).expect("valid label")
    };
    let examples: Vec<Example> = (0..train + test).map(&mut make).collect();
    let (train_set, test_set) = examples.split_at(train);
    SyntheticCorpus {
        vocab: vocabulary(),
        train: train_set.to_vec(),
        test: test_set.to_vec(),
    }
}

/// Multiple-choice corpus: the context mentions one topic's context cue and
/// the correct option that topic's holding cue; distractors carry other
/// topics' holding cues.
pub fn multiple_choice_corpus(train: usize, test: usize, seed: u64) -> SyntheticCorpus {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut make = |i: usize| {
        let mut topics: Vec<usize> = (0..TOPICS.len()).collect();
        topics.shuffle(&mut rng);
        let topics = &topics[..NUM_CHOICES];
        let answer = rng.random_range(0..NUM_CHOICES);
        let mut ctx = filler_words(&mut rng, 6, 14);
        let at = rng.random_range(0..=ctx.len());
        ctx.insert(at, TOPICS[topics[answer]][0]);
        let options = topics
            .iter()
            .map(|&t| {
                let mut words = vec!["holding", "that"];
                words.extend(filler_words(&mut rng, 2, 6));
                let at = rng.random_range(2..=words.len());
                words.insert(at, TOPICS[t][1]);
                words.join(" ")
            })
            .collect();
        Example::multiple_choice(format!("mc-{i:05}"), sentence(ctx), options, answer)
            .expect("five options")
    };
    let examples: Vec<Example> = (0..train + test).map(&mut make).collect();
    let (train_set, test_set) = examples.split_at(train);
    SyntheticCorpus {
        vocab: vocabulary(),
        train: train_set.to_vec(),
        test: test_set.to_vec(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tokenizer::tokenize;

    #[test]
    fn deterministic_and_in_vocab() {
        let a = binary_corpus(20, 5, 3);
        let b = binary_corpus(20, 5, 3);
        assert_eq!(a.train, b.train);
        assert_eq!(a.test.len(), 5);
        for ex in a.train.iter().chain(&a.test) {
            for text in ex.texts() {
                let tok = tokenize(text, &a.vocab, false);
                assert!(!tok.token_ids.contains(&a.vocab.unk_id()), "{text}");
            }
        }
    }

    #[test]
    fn keyword_sets_are_disjoint() {
        for p in POSITIVE_KEYWORDS {
            assert!(!NEGATIVE_KEYWORDS.contains(&p));
            assert!(!FILLER.contains(&p));
        }
        for n in NEGATIVE_KEYWORDS {
            assert!(!FILLER.contains(&n));
        }
    }

    #[test]
    fn multiple_choice_shape() {
        let c = multiple_choice_corpus(10, 2, 1);
        for ex in &c.train {
            let Example::MultipleChoice {
                context,
                options,
                label,
                ..
            } = ex
            else {
                panic!()
            };
            assert_eq!(options.len(), NUM_CHOICES);
            let (cue, holding) = TOPICS
                .iter()
                .map(|t| (t[0], t[1]))
                .find(|(c, _)| context.split(' ').any(|w| w == *c))
                .unwrap();
            assert!(!cue.is_empty());
            assert!(options[*label].split(' ').any(|w| w == holding));
        }
        let tok = tokenize("interlocutory", &c.vocab, false);
        assert_eq!(tok.token_strings, vec!["inter", "##loc", "##utory"]);
    }
}
