use std::ops::Range;

use serde::{Deserialize, Serialize};

use super::vocab::{decode_piece, is_continuation};
use super::{TokenizedText, TokenizerError};

/// A word rebuilt from a head piece and its `##` continuations.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MergedWord {
    pub word: String,
    /// Token positions covered, in `TokenizedText` coordinates.
    pub span: Range<usize>,
}

/// Rejoins WordPiece splits: each head token plus the continuation tokens
/// that follow it becomes one word with the prefixes stripped. Special tokens
/// are skipped and also end a run.
pub fn merge_broken_words(tok: &TokenizedText) -> Result<Vec<MergedWord>, TokenizerError> {
    let mut words: Vec<MergedWord> = Vec::new();
    let mut open = false;
    for (i, token) in tok.token_strings.iter().enumerate() {
        if tok.is_special[i] {
            open = false;
            continue;
        }
        if is_continuation(token) {
            let Some(last) = words.last_mut().filter(|_| open) else {
                return Err(TokenizerError::LeadingContinuation { position: i });
            };
            last.word.push_str(decode_piece(token));
            last.span.end = i + 1;
        } else {
            words.push(MergedWord {
                word: token.clone(),
                span: i..i + 1,
            });
            open = true;
        }
    }
    Ok(words)
}
