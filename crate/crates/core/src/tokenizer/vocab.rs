use std::collections::{BTreeSet, HashMap};
use std::fs;
use std::path::Path;

use super::TokenizerError;

/// Prefix carried by every non-initial WordPiece piece.
pub const CONTINUATION_PREFIX: &str = "##";

pub const PAD: &str = "[PAD]";
pub const UNK: &str = "[UNK]";
pub const CLS: &str = "[CLS]";
pub const SEP: &str = "[SEP]";
pub const MASK: &str = "[MASK]";

/// Tokens treated as special whenever they are present in a vocabulary.
pub const DEFAULT_SPECIALS: [&str; 5] = [PAD, UNK, CLS, SEP, MASK];

/// Identifier of a token within one [`Vocabulary`].
pub type TokenId = u32;

/// Token-string to id bijection loaded from a one-token-per-line file.
///
/// Line index is the token id. The vocabulary is immutable once built and can
/// be shared freely across threads.
#[derive(Debug, Clone)]
pub struct Vocabulary {
    entries: Vec<String>,
    index: HashMap<String, TokenId>,
    specials: BTreeSet<String>,
    unk: TokenId,
}

impl Vocabulary {
    /// Builds a vocabulary from tokens in id order.
    pub fn from_tokens<I, S>(tokens: I) -> Result<Self, TokenizerError>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let mut entries = Vec::new();
        let mut index = HashMap::new();
        for (i, token) in tokens.into_iter().enumerate() {
            let token = token.into();
            let line = i + 1;
            if token.is_empty() {
                return Err(TokenizerError::EmptyToken { line });
            }
            if let Some(&first) = index.get(&token) {
                return Err(TokenizerError::DuplicateToken {
                    token,
                    line,
                    first_line: first as usize + 1,
                });
            }
            let id = TokenId::try_from(i).map_err(|_| TokenizerError::TooLarge)?;
            index.insert(token.clone(), id);
            entries.push(token);
        }
        let unk = *index.get(UNK).ok_or(TokenizerError::MissingUnk)?;
        let specials = DEFAULT_SPECIALS
            .iter()
            .filter(|s| index.contains_key(**s))
            .map(|s| s.to_string())
            .collect();
        Ok(Self {
            entries,
            index,
            specials,
            unk,
        })
    }

    /// Parses vocabulary file contents. A single trailing newline does not
    /// produce an entry; `\r\n` line endings are accepted.
    pub fn parse(contents: &str) -> Result<Self, TokenizerError> {
        let body = contents.strip_suffix('\n').unwrap_or(contents);
        if body.is_empty() {
            return Self::from_tokens(std::iter::empty::<String>());
        }
        Self::from_tokens(body.split('\n').map(|l| l.strip_suffix('\r').unwrap_or(l)))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, TokenizerError> {
        let path = path.as_ref();
        let contents = fs::read_to_string(path).map_err(|source| TokenizerError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::parse(&contents)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn id(&self, token: &str) -> Option<TokenId> {
        self.index.get(token).copied()
    }

    pub fn token(&self, id: TokenId) -> Option<&str> {
        self.entries.get(id as usize).map(String::as_str)
    }

    pub fn contains(&self, token: &str) -> bool {
        self.index.contains_key(token)
    }

    pub fn unk_id(&self) -> TokenId {
        self.unk
    }

    /// Id used for a special marker, falling back to `[UNK]` when the
    /// vocabulary lacks it.
    pub fn special_id(&self, token: &str) -> TokenId {
        self.id(token).unwrap_or(self.unk)
    }

    pub fn is_special(&self, token: &str) -> bool {
        self.specials.contains(token)
    }

    pub fn specials(&self) -> &BTreeSet<String> {
        &self.specials
    }

    /// Tokens in id order.
    pub fn tokens(&self) -> impl ExactSizeIterator<Item = &str> + '_ {
        self.entries.iter().map(String::as_str)
    }

    /// Serializes back to the on-disk format.
    pub fn to_file_contents(&self) -> String {
        let mut out = String::with_capacity(self.entries.iter().map(|e| e.len() + 1).sum());
        for e in &self.entries {
            out.push_str(e);
            out.push('\n');
        }
        out
    }
}

/// Loads a vocabulary file: one UTF-8 token per line, line index = id.
pub fn load_vocab(path: impl AsRef<Path>) -> Result<Vocabulary, TokenizerError> {
    Vocabulary::load(path)
}

/// Strips the continuation prefix, if any.
pub fn decode_piece(token: &str) -> &str {
    token.strip_prefix(CONTINUATION_PREFIX).unwrap_or(token)
}

pub fn is_continuation(token: &str) -> bool {
    token.len() > CONTINUATION_PREFIX.len() && token.starts_with(CONTINUATION_PREFIX)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ids_follow_line_order() {
        let v = Vocabulary::parse("[PAD]\n[UNK]\nthe\n").unwrap();
        assert_eq!(v.len(), 3);
        assert_eq!(v.id("[PAD]"), Some(0));
        assert_eq!(v.id("[UNK]"), Some(1));
        assert_eq!(v.id("the"), Some(2));
        assert_eq!(v.token(2), Some("the"));
        assert_eq!(v.unk_id(), 1);
    }

    #[test]
    fn duplicate_reports_line() {
        let err = Vocabulary::parse("[UNK]\nthe\nof\nthe\n").unwrap_err();
        match err {
            TokenizerError::DuplicateToken {
                token,
                line,
                first_line,
            } => {
                assert_eq!(token, "the");
                assert_eq!(line, 4);
                assert_eq!(first_line, 2);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn missing_unk() {
        assert!(matches!(
            Vocabulary::parse("[PAD]\nthe\n"),
            Err(TokenizerError::MissingUnk)
        ));
    }

    #[test]
    fn trailing_newline_optional() {
        let a = Vocabulary::parse("[UNK]\na").unwrap();
        let b = Vocabulary::parse("[UNK]\na\n").unwrap();
        assert_eq!(a.len(), 2);
        assert_eq!(b.len(), 2);
        assert!(matches!(
            Vocabulary::parse("[UNK]\n\na\n"),
            Err(TokenizerError::EmptyToken { line: 2 })
        ));
    }

    #[test]
    fn crlf_lines() {
        let v = Vocabulary::parse("[UNK]\r\nthe\r\n").unwrap();
        assert_eq!(v.id("the"), Some(1));
    }

    #[test]
    fn file_contents_round_trip() {
        let src = "[PAD]\n[UNK]\n[CLS]\n[SEP]\ncourt\n##s\n";
        let v = Vocabulary::parse(src).unwrap();
        assert_eq!(v.to_file_contents(), src);
        assert!(v.is_special("[CLS]"));
        assert!(!v.is_special("[MASK]"));
    }

    #[test]
    fn continuation_helpers() {
        assert!(is_continuation("##ing"));
        assert!(!is_continuation("##"));
        assert!(!is_continuation("ing"));
        assert_eq!(decode_piece("##ing"), "ing");
        assert_eq!(decode_piece("court"), "court");
    }
}
