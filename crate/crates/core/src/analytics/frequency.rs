use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::AnalyticsError;
use crate::tokenizer::{merge_broken_words, TokenizedText, Vocabulary};

/// What a frequency table counts.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FrequencyMode {
    /// WordPiece tokens as they appear, `##` pieces included.
    Token,
    /// Whole words rebuilt from their pieces.
    #[default]
    MergedWord,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct FrequencyTable {
    pub counts: BTreeMap<String, u64>,
    pub total: u64,
}

impl FrequencyTable {
    pub fn from_tokens<'a>(tokens: impl IntoIterator<Item = &'a str>) -> Self {
        let mut t = FrequencyTable::default();
        for tok in tokens {
            t.add(tok, 1);
        }
        t
    }

    fn add(&mut self, token: &str, n: u64) {
        *self.counts.entry(token.to_string()).or_insert(0) += n;
        self.total += n;
    }

    fn merge(self, other: FrequencyTable) -> Self {
        let (mut big, small) = if self.counts.len() >= other.counts.len() {
            (self, other)
        } else {
            (other, self)
        };
        for (tok, n) in small.counts {
            big.add(&tok, n);
        }
        big
    }

    pub fn count(&self, token: &str) -> u64 {
        self.counts.get(token).copied().unwrap_or(0)
    }

    /// The `k` most frequent entries, by count descending then token ascending.
    pub fn top_k(&self, k: usize) -> Vec<(String, u64)> {
        let mut rows: Vec<(String, u64)> = self.counts.iter().map(|(t, n)| (t.clone(), *n)).collect();
        rows.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
        rows.truncate(k);
        rows
    }
}

/// Counts non-special tokens (or merged words) over a corpus.
pub fn token_frequencies(
    corpus: &[TokenizedText],
    mode: FrequencyMode,
) -> Result<FrequencyTable, AnalyticsError> {
    corpus
        .par_iter()
        .map(|text| -> Result<FrequencyTable, AnalyticsError> {
            Ok(match mode {
                FrequencyMode::Token => FrequencyTable::from_tokens(
                    text.token_strings
                        .iter()
                        .zip(&text.is_special)
                        .filter(|(_, s)| !**s)
                        .map(|(t, _)| t.as_str()),
                ),
                FrequencyMode::MergedWord => {
                    let words = merge_broken_words(text)?;
                    FrequencyTable::from_tokens(words.iter().map(|w| w.word.as_str()))
                }
            })
        })
        .try_reduce(FrequencyTable::default, |a, b| Ok(a.merge(b)))
}

/// One frequent corpus entry and the vocabularies that contain it.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CoverageRow {
    pub token: String,
    pub count: u64,
    pub present_in: Vec<String>,
    /// Absent from at least one vocabulary.
    pub missing: bool,
}

/// For each of the top `k` entries of `table`, which vocabularies contain it
/// as a whole token.
pub fn model_token_coverage(
    table: &FrequencyTable,
    k: usize,
    vocabs: &[(&str, &Vocabulary)],
) -> Result<Vec<CoverageRow>, AnalyticsError> {
    if vocabs.is_empty() {
        return Err(AnalyticsError::TooFewSources { needed: 1, found: 0 });
    }
    Ok(table
        .top_k(k)
        .into_iter()
        .map(|(token, count)| {
            let present_in: Vec<String> = vocabs
                .iter()
                .filter(|(_, v)| v.contains(&token))
                .map(|(name, _)| name.to_string())
                .collect();
            CoverageRow {
                missing: present_in.len() < vocabs.len(),
                token,
                count,
                present_in,
            }
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tokenizer::tokenize;

    #[test]
    fn counts_simple_corpus() {
        let t = FrequencyTable::from_tokens(["a", "a", "b"]);
        assert_eq!(t.count("a"), 2);
        assert_eq!(t.count("b"), 1);
        assert_eq!(t.total, 3);
        assert_eq!(token_frequencies(&[], FrequencyMode::Token).unwrap(), FrequencyTable::default());
    }

    #[test]
    fn modes_and_ties() {
        let v = Vocabulary::from_tokens(["[PAD]", "[UNK]", "[CLS]", "[SEP]", "in", "##ter", "a", "b"]).unwrap();
        let corpus = vec![tokenize("inter a b", &v, true), tokenize("b a", &v, true)];
        let tok = token_frequencies(&corpus, FrequencyMode::Token).unwrap();
        assert_eq!(tok.total, 6);
        assert_eq!(tok.count("##ter"), 1);
        assert_eq!(tok.count("[CLS]"), 0);
        let words = token_frequencies(&corpus, FrequencyMode::MergedWord).unwrap();
        assert_eq!(words.total, 5);
        assert_eq!(words.count("inter"), 1);
        assert_eq!(
            words.top_k(2),
            vec![("a".to_string(), 2), ("b".to_string(), 2)]
        );
    }

    #[test]
    fn coverage_flags_missing() {
        let a = Vocabulary::from_tokens(["[UNK]", "x", "y"]).unwrap();
        let b = Vocabulary::from_tokens(["[UNK]", "x"]).unwrap();
        let t = FrequencyTable::from_tokens(["x", "y", "z", "x"]);
        let rows = model_token_coverage(&t, 3, &[("a", &a), ("b", &b)]).unwrap();
        assert_eq!(rows[0].present_in, ["a", "b"]);
        assert!(!rows[0].missing);
        assert_eq!(rows[1].present_in, ["a"]);
        assert!(rows[2].present_in.is_empty() && rows[2].missing);
    }
}
