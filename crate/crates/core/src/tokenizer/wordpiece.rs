use serde::{Deserialize, Serialize};

use super::basic::basic_tokenize;
use super::vocab::{TokenId, Vocabulary, CLS, CONTINUATION_PREFIX, SEP, UNK};

/// Words longer than this many characters map straight to `[UNK]`.
pub const MAX_WORD_CHARS: usize = 100;

/// Greedy longest-match-first WordPiece segmentation of one normalized word.
///
/// Returns `["[UNK]"]` when the word is too long or some suffix cannot be
/// matched.
pub fn wordpiece_word(word: &str, vocab: &Vocabulary) -> Vec<String> {
    let chars: Vec<(usize, char)> = word.char_indices().collect();
    if chars.is_empty() {
        return Vec::new();
    }
    if chars.len() > MAX_WORD_CHARS {
        return vec![UNK.to_string()];
    }
    let byte_at = |ci: usize| chars.get(ci).map_or(word.len(), |&(b, _)| b);

    let mut pieces = Vec::new();
    let mut start = 0;
    let mut candidate = String::new();
    while start < chars.len() {
        let mut end = chars.len();
        let mut found = None;
        while start < end {
            candidate.clear();
            if start > 0 {
                candidate.push_str(CONTINUATION_PREFIX);
            }
            candidate.push_str(&word[byte_at(start)..byte_at(end)]);
            if vocab.contains(&candidate) {
                found = Some(candidate.clone());
                break;
            }
            end -= 1;
        }
        match found {
            Some(piece) => {
                pieces.push(piece);
                start = end;
            }
            None => return vec![UNK.to_string()],
        }
    }
    pieces
}

/// Token ids of one text with per-token word grouping and special flags.
///
/// All four vectors are parallel. `word_index` is `None` for special markers
/// and otherwise counts source words from 0 in non-decreasing order.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct TokenizedText {
    pub token_ids: Vec<TokenId>,
    pub token_strings: Vec<String>,
    pub word_index: Vec<Option<usize>>,
    pub is_special: Vec<bool>,
}

impl TokenizedText {
    pub fn len(&self) -> usize {
        self.token_ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.token_ids.is_empty()
    }

    /// Number of tokens that are not special markers.
    pub fn content_len(&self) -> usize {
        self.is_special.iter().filter(|s| !**s).count()
    }

    fn push(&mut self, id: TokenId, token: String, word: Option<usize>, special: bool) {
        self.token_ids.push(id);
        self.token_strings.push(token);
        self.word_index.push(word);
        self.is_special.push(special);
    }

    fn push_special(&mut self, vocab: &Vocabulary, token: &str) {
        self.push(vocab.special_id(token), token.to_string(), None, true);
    }

    /// `self ⧺ other ⧺ [SEP]`, with `other`'s leading `[CLS]` dropped and its
    /// word indices shifted past ours. Used for (context, option) pairs.
    pub fn pair_with(&self, other: &TokenizedText, sep_id: TokenId) -> TokenizedText {
        let mut out = self.clone();
        let offset = self.word_index.iter().flatten().max().map_or(0, |m| m + 1);
        let skip = usize::from(other.token_strings.first().is_some_and(|t| t == CLS));
        for i in skip..other.len() {
            out.push(
                other.token_ids[i],
                other.token_strings[i].clone(),
                other.word_index[i].map(|w| w + offset),
                other.is_special[i],
            );
        }
        if other.token_strings.last().map(String::as_str) != Some(SEP) {
            out.push(sep_id, SEP.to_string(), None, true);
        }
        out
    }

    /// Keeps at most `max_tokens` positions. A trailing `[SEP]` is preserved
    /// when the text is cut.
    pub fn truncated(&self, max_tokens: usize) -> TokenizedText {
        if self.len() <= max_tokens {
            return self.clone();
        }
        let ends_with_sep = self.token_strings.last().map(String::as_str) == Some(SEP);
        let keep = if ends_with_sep && max_tokens > 0 {
            max_tokens - 1
        } else {
            max_tokens
        };
        let mut out = TokenizedText {
            token_ids: self.token_ids[..keep].to_vec(),
            token_strings: self.token_strings[..keep].to_vec(),
            word_index: self.word_index[..keep].to_vec(),
            is_special: self.is_special[..keep].to_vec(),
        };
        if keep < max_tokens {
            let last = self.len() - 1;
            out.push(
                self.token_ids[last],
                self.token_strings[last].clone(),
                None,
                true,
            );
        }
        out
    }
}

/// Tokenizes `text` with greedy WordPiece over `vocab`, optionally wrapping the
/// result in `[CLS]` … `[SEP]`.
pub fn tokenize(text: &str, vocab: &Vocabulary, add_specials: bool) -> TokenizedText {
    let mut out = TokenizedText::default();
    if add_specials {
        out.push_special(vocab, CLS);
    }
    for (w, word) in basic_tokenize(text).iter().enumerate() {
        for piece in wordpiece_word(word, vocab) {
            let id = vocab.id(&piece).unwrap_or_else(|| vocab.unk_id());
            out.push(id, piece, Some(w), false);
        }
    }
    if add_specials {
        out.push_special(vocab, SEP);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn vocab(tokens: &[&str]) -> Vocabulary {
        let mut all = vec!["[PAD]", "[UNK]", "[CLS]", "[SEP]"];
        all.extend_from_slice(tokens);
        Vocabulary::from_tokens(all).unwrap()
    }

    #[test]
    fn whole_word() {
        let v = vocab(&["court"]);
        assert_eq!(wordpiece_word("court", &v), vec!["court"]);
    }

    #[test]
    fn greedy_longest_prefix() {
        let v = vocab(&["un", "unaff", "##aff", "##able"]);
        assert_eq!(wordpiece_word("unaffable", &v), vec!["unaff", "##able"]);
    }

    #[test]
    fn unmatched_is_unk() {
        let v = vocab(&["court"]);
        assert_eq!(wordpiece_word("☃", &v), vec!["[UNK]"]);
        // a matched head with an unmatched tail still fails as a whole
        assert_eq!(wordpiece_word("courtx", &v), vec!["[UNK]"]);
    }

    #[test]
    fn long_word_is_unk() {
        let v = vocab(&["a", "##a"]);
        let word = "a".repeat(MAX_WORD_CHARS);
        assert_eq!(wordpiece_word(&word, &v).len(), MAX_WORD_CHARS);
        let word = "a".repeat(MAX_WORD_CHARS + 1);
        assert_eq!(wordpiece_word(&word, &v), vec!["[UNK]"]);
    }

    #[test]
    fn multibyte_pieces() {
        let v = vocab(&["é", "##t", "##é"]);
        assert_eq!(wordpiece_word("été", &v), vec!["é", "##t", "##é"]);
    }

    #[test]
    fn empty_with_specials() {
        let v = vocab(&[]);
        let t = tokenize("", &v, true);
        assert_eq!(t.token_strings, vec!["[CLS]", "[SEP]"]);
        assert_eq!(t.token_ids, vec![2, 3]);
        assert_eq!(t.is_special, vec![true, true]);
        assert_eq!(t.word_index, vec![None, None]);
    }

    #[test]
    fn grouping_by_word() {
        let v = vocab(&["court", "over", "##rul", "##ing"]);
        let t = tokenize("court court", &v, false);
        assert_eq!(t.token_strings, vec!["court", "court"]);
        assert_eq!(t.word_index, vec![Some(0), Some(1)]);

        let t = tokenize("Overruling court", &v, true);
        assert_eq!(
            t.token_strings,
            vec!["[CLS]", "over", "##rul", "##ing", "court", "[SEP]"]
        );
        assert_eq!(
            t.word_index,
            vec![None, Some(0), Some(0), Some(0), Some(1), None]
        );
    }

    #[test]
    fn missing_specials_fall_back_to_unk() {
        let v = Vocabulary::from_tokens(["[UNK]", "a"]).unwrap();
        let t = tokenize("a", &v, true);
        assert_eq!(t.token_ids, vec![0, 1, 0]);
        assert_eq!(t.token_strings, vec!["[CLS]", "a", "[SEP]"]);
    }

    #[test]
    fn pair_construction() {
        let v = vocab(&["a", "b", "c"]);
        let ctx = tokenize("a b", &v, true);
        let opt = tokenize("c", &v, true);
        let pair = ctx.pair_with(&opt, v.special_id(SEP));
        assert_eq!(pair.token_strings, vec!["[CLS]", "a", "b", "[SEP]", "c", "[SEP]"]);
        assert_eq!(
            pair.word_index,
            vec![None, Some(0), Some(1), None, Some(2), None]
        );
    }

    #[test]
    fn truncation_keeps_sep() {
        let v = vocab(&["a"]);
        let t = tokenize("a a a a a", &v, true);
        let cut = t.truncated(4);
        assert_eq!(cut.token_strings, vec!["[CLS]", "a", "a", "[SEP]"]);
        assert_eq!(t.truncated(100), t);
        let t = tokenize("a a a", &v, false);
        assert_eq!(t.truncated(2).len(), 2);
    }
}
