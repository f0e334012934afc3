//! Vocabulary loading, uncased WordPiece tokenization, broken-word merging
//! and token-sequence phrase queries.

mod basic;
mod merge;
mod phrase;
mod vocab;
mod wordpiece;

pub use basic::basic_tokenize;
pub use merge::{merge_broken_words, MergedWord};
pub use phrase::{
    build_queries, load_phrases, phrase_frequencies, phrase_search, PhraseCount, PhraseHit,
    PhraseQuery,
};
pub use vocab::{
    decode_piece, is_continuation, load_vocab, TokenId, Vocabulary, CLS, CONTINUATION_PREFIX,
    DEFAULT_SPECIALS, MASK, PAD, SEP, UNK,
};
pub use wordpiece::{tokenize, wordpiece_word, TokenizedText, MAX_WORD_CHARS};

/// Default cap on positions per tokenized input.
pub const DEFAULT_MAX_TOKENS: usize = 512;

#[derive(Debug, thiserror::Error)]
pub enum TokenizerError {
    #[error("failed to read {path}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("duplicate token {token:?} on line {line} (first seen on line {first_line})")]
    DuplicateToken {
        token: String,
        line: usize,
        first_line: usize,
    },
    #[error("empty token on line {line}")]
    EmptyToken { line: usize },
    #[error("vocabulary has no [UNK] entry")]
    MissingUnk,
    #[error("vocabulary exceeds the id range")]
    TooLarge,
    #[error("continuation token at position {position} has no head token")]
    LeadingContinuation { position: usize },
    #[error("phrase {label:?} produced no tokens")]
    EmptyQuery { label: String },
}
