use std::fs;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::vocab::{TokenId, Vocabulary};
use super::{tokenize, TokenizedText, TokenizerError};

/// A phrase tokenized with the vocabulary of the corpus it will be run
/// against.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PhraseQuery {
    pub label: String,
    pub token_ids: Vec<TokenId>,
    /// Set when tokenization produced `[UNK]`; the query still runs.
    pub degraded: bool,
}

impl PhraseQuery {
    pub fn new(phrase: &str, vocab: &Vocabulary) -> Result<Self, TokenizerError> {
        let tok = tokenize(phrase, vocab, false);
        Self::from_ids(phrase, tok.token_ids, vocab.unk_id())
    }

    pub fn from_ids(
        label: &str,
        token_ids: Vec<TokenId>,
        unk: TokenId,
    ) -> Result<Self, TokenizerError> {
        if token_ids.is_empty() {
            return Err(TokenizerError::EmptyQuery {
                label: label.to_string(),
            });
        }
        let degraded = token_ids.contains(&unk);
        Ok(Self {
            label: label.to_string(),
            token_ids,
            degraded,
        })
    }
}

/// One occurrence of a query inside a corpus.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct PhraseHit {
    pub example: usize,
    pub offset: usize,
}

/// Every exact contiguous occurrence of `query` in `corpus`, ordered by
/// example then offset. Overlapping occurrences are all reported.
pub fn phrase_search(
    corpus: &[TokenizedText],
    query: &PhraseQuery,
) -> Result<Vec<PhraseHit>, TokenizerError> {
    if query.token_ids.is_empty() {
        return Err(TokenizerError::EmptyQuery {
            label: query.label.clone(),
        });
    }
    let matcher = Matcher::new(&query.token_ids);
    let hits = corpus
        .par_iter()
        .enumerate()
        .map(|(example, text)| {
            matcher
                .find_all(&text.token_ids)
                .into_iter()
                .map(|offset| PhraseHit { example, offset })
                .collect::<Vec<_>>()
        })
        .collect::<Vec<_>>()
        .into_iter()
        .flatten()
        .collect();
    Ok(hits)
}

/// Per-query totals for a phrase list run over one corpus.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PhraseCount {
    pub label: String,
    pub token_len: usize,
    pub degraded: bool,
    pub occurrences: usize,
    /// Number of distinct examples with at least one occurrence.
    pub examples: usize,
}

/// Runs each query and tallies occurrences, in query order.
pub fn phrase_frequencies(
    corpus: &[TokenizedText],
    queries: &[PhraseQuery],
) -> Result<Vec<PhraseCount>, TokenizerError> {
    queries
        .iter()
        .map(|q| {
            let hits = phrase_search(corpus, q)?;
            let mut examples = hits.iter().map(|h| h.example).collect::<Vec<_>>();
            examples.dedup();
            Ok(PhraseCount {
                label: q.label.clone(),
                token_len: q.token_ids.len(),
                degraded: q.degraded,
                occurrences: hits.len(),
                examples: examples.len(),
            })
        })
        .collect()
}

/// Reads a phrase list: one phrase per line, blank lines ignored.
pub fn load_phrases(path: impl AsRef<Path>) -> Result<Vec<String>, TokenizerError> {
    let path = path.as_ref();
    let contents = fs::read_to_string(path).map_err(|source| TokenizerError::Io {
        path: path.display().to_string(),
        source,
    })?;
    Ok(contents
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty())
        .map(String::from)
        .collect())
}

/// Tokenizes each phrase into a query against `vocab`.
pub fn build_queries(
    phrases: &[String],
    vocab: &Vocabulary,
) -> Result<Vec<PhraseQuery>, TokenizerError> {
    phrases.iter().map(|p| PhraseQuery::new(p, vocab)).collect()
}

/// Knuth–Morris–Pratt matcher over token ids.
struct Matcher<'a> {
    pattern: &'a [TokenId],
    failure: Vec<usize>,
}

impl<'a> Matcher<'a> {
    fn new(pattern: &'a [TokenId]) -> Self {
        let mut failure = vec![0; pattern.len()];
        let mut k = 0;
        for i in 1..pattern.len() {
            while k > 0 && pattern[i] != pattern[k] {
                k = failure[k - 1];
            }
            if pattern[i] == pattern[k] {
                k += 1;
            }
            failure[i] = k;
        }
        Self { pattern, failure }
    }

    fn find_all(&self, text: &[TokenId]) -> Vec<usize> {
        let m = self.pattern.len();
        let mut out = Vec::new();
        let mut k = 0;
        for (i, &t) in text.iter().enumerate() {
            while k > 0 && t != self.pattern[k] {
                k = self.failure[k - 1];
            }
            if t == self.pattern[k] {
                k += 1;
            }
            if k == m {
                out.push(i + 1 - m);
                k = self.failure[k - 1];
            }
        }
        out
    }
}
