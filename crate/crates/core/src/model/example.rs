use serde::{Deserialize, Serialize};

use super::config::TaskKind;
use super::ModelError;
use crate::tokenizer::{tokenize, TokenId, TokenizedText, Vocabulary, SEP};

/// Answer choices per multiple-choice example.
pub const NUM_CHOICES: usize = 5;

/// A labeled dataset record before tokenization.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Example {
    Binary {
        id: String,
        text: String,
        label: usize,
    },
    MultipleChoice {
        id: String,
        context: String,
        options: Vec<String>,
        label: usize,
    },
}

impl Example {
    pub fn binary(id: impl Into<String>, text: impl Into<String>, label: usize) -> Result<Self, ModelError> {
        if label > 1 {
            return Err(ModelError::LabelOutOfRange { label, classes: 2 });
        }
        Ok(Example::Binary {
            id: id.into(),
            text: text.into(),
            label,
        })
    }

    pub fn multiple_choice(
        id: impl Into<String>,
        context: impl Into<String>,
        options: Vec<String>,
        label: usize,
    ) -> Result<Self, ModelError> {
        if options.len() != NUM_CHOICES {
            return Err(ModelError::OptionCountMismatch {
                expected: NUM_CHOICES,
                found: options.len(),
            });
        }
        if label >= NUM_CHOICES {
            return Err(ModelError::LabelOutOfRange {
                label,
                classes: NUM_CHOICES,
            });
        }
        Ok(Example::MultipleChoice {
            id: id.into(),
            context: context.into(),
            options,
            label,
        })
    }

    pub fn id(&self) -> &str {
        match self {
            Example::Binary { id, .. } | Example::MultipleChoice { id, .. } => id,
        }
    }

    pub fn label(&self) -> usize {
        match self {
            Example::Binary { label, .. } | Example::MultipleChoice { label, .. } => *label,
        }
    }

    pub fn kind(&self) -> TaskKind {
        match self {
            Example::Binary { .. } => TaskKind::Binary,
            Example::MultipleChoice { .. } => TaskKind::MultipleChoice,
        }
    }

    /// All raw texts of the example (text, or context followed by options).
    pub fn texts(&self) -> Vec<&str> {
        match self {
            Example::Binary { text, .. } => vec![text.as_str()],
            Example::MultipleChoice {
                context, options, ..
            } => std::iter::once(context.as_str())
                .chain(options.iter().map(String::as_str))
                .collect(),
        }
    }

    /// Tokenizes with `[CLS]`/`[SEP]` markers and caps every model input at
    /// `max_tokens` positions. Multiple-choice pairs are cut from the context
    /// side first.
    pub fn encode(&self, vocab: &Vocabulary, max_tokens: usize) -> EncodedExample {
        let input = match self {
            Example::Binary { text, .. } => {
                EncodedInput::Single(tokenize(text, vocab, true).truncated(max_tokens))
            }
            Example::MultipleChoice {
                context, options, ..
            } => {
                let ctx = tokenize(context, vocab, true);
                let sep = vocab.special_id(SEP);
                let pairs = options
                    .iter()
                    .map(|opt| {
                        let opt = tokenize(opt, vocab, false);
                        // [CLS] + at least one context slot + [SEP] ... [SEP]
                        let opt_budget = max_tokens.saturating_sub(3).max(1);
                        let opt = opt.truncated(opt_budget);
                        let ctx_budget = max_tokens.saturating_sub(opt.len() + 1).max(2);
                        ctx.truncated(ctx_budget).pair_with(&opt, sep)
                    })
                    .collect();
                EncodedInput::Choices(pairs)
            }
        };
        EncodedExample {
            id: self.id().to_string(),
            input,
            label: self.label(),
        }
    }
}

/// Tokenized model input.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum EncodedInput {
    Single(TokenizedText),
    /// One `context ⧺ [SEP] ⧺ option ⧺ [SEP]` sequence per answer choice.
    Choices(Vec<TokenizedText>),
}

impl EncodedInput {
    pub fn kind(&self) -> TaskKind {
        match self {
            EncodedInput::Single(_) => TaskKind::Binary,
            EncodedInput::Choices(_) => TaskKind::MultipleChoice,
        }
    }

    pub fn segments(&self) -> &[TokenizedText] {
        match self {
            EncodedInput::Single(t) => std::slice::from_ref(t),
            EncodedInput::Choices(pairs) => pairs,
        }
    }

    /// Token ids of all segments, stacked in segment order.
    pub fn token_ids(&self) -> Vec<TokenId> {
        self.segments()
            .iter()
            .flat_map(|s| s.token_ids.iter().copied())
            .collect()
    }

    /// Row layout of the stacked input embedding matrix.
    pub fn layout(&self) -> InputLayout {
        let mut segments = Vec::new();
        let mut start = 0;
        for seg in self.segments() {
            let content = seg
                .is_special
                .iter()
                .enumerate()
                .filter(|(_, s)| !**s)
                .map(|(i, _)| start + i)
                .collect();
            segments.push(Segment {
                rows: start..start + seg.len(),
                content,
            });
            start += seg.len();
        }
        InputLayout {
            kind: self.kind(),
            segments,
        }
    }
}

/// Rows of one segment in the stacked embedding matrix.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Segment {
    pub rows: std::ops::Range<usize>,
    /// Absolute row indices of non-special tokens; these are mean-pooled.
    pub content: Vec<usize>,
}

/// How a stacked `rows × embed_dim` input maps onto the classifier head.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InputLayout {
    pub kind: TaskKind,
    pub segments: Vec<Segment>,
}

impl InputLayout {
    pub fn rows(&self) -> usize {
        self.segments.last().map_or(0, |s| s.rows.end)
    }

    /// Segment index per row.
    pub fn segment_of_rows(&self) -> Vec<usize> {
        self.segments
            .iter()
            .enumerate()
            .flat_map(|(k, s)| std::iter::repeat_n(k, s.rows.len()))
            .collect()
    }
}

/// A tokenized example ready for the classifier.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EncodedExample {
    pub id: String,
    pub input: EncodedInput,
    pub label: usize,
}

impl EncodedExample {
    pub fn kind(&self) -> TaskKind {
        self.input.kind()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn vocab() -> Vocabulary {
        Vocabulary::from_tokens(["[PAD]", "[UNK]", "[CLS]", "[SEP]", "a", "b", "c"]).unwrap()
    }

    #[test]
    fn constructors_validate() {
        assert!(Example::binary("x", "a", 2).is_err());
        let opts = |n| (0..n).map(|i| format!("o{i}")).collect::<Vec<_>>();
        assert!(matches!(
            Example::multiple_choice("x", "c", opts(4), 0),
            Err(ModelError::OptionCountMismatch { found: 4, .. })
        ));
        assert!(matches!(
            Example::multiple_choice("x", "c", opts(5), 5),
            Err(ModelError::LabelOutOfRange { .. })
        ));
        assert!(Example::multiple_choice("x", "c", opts(5), 4).is_ok());
    }

    #[test]
    fn multiple_choice_encoding() {
        let ex = Example::multiple_choice(
            "e",
            "a b",
            vec!["a".into(), "b".into(), "c".into(), "a b".into(), "".into()],
            2,
        )
        .unwrap();
        let enc = ex.encode(&vocab(), 512);
        let EncodedInput::Choices(pairs) = &enc.input else {
            panic!()
        };
        assert_eq!(pairs.len(), 5);
        assert_eq!(pairs[2].token_strings, vec!["[CLS]", "a", "b", "[SEP]", "c", "[SEP]"]);
        assert_eq!(pairs[4].token_strings, vec!["[CLS]", "a", "b", "[SEP]", "[SEP]"]);
        let layout = enc.input.layout();
        assert_eq!(layout.rows(), 6 + 6 + 6 + 7 + 5);
        assert_eq!(layout.segments[1].rows, 6..12);
        assert_eq!(layout.segments[1].content, vec![7, 8, 10]);
    }

    #[test]
    fn pair_truncation_keeps_option() {
        let ex = Example::multiple_choice(
            "e",
            "a a a a a a a a",
            vec!["b b".into(), "c".into(), "c".into(), "c".into(), "c".into()],
            0,
        )
        .unwrap();
        let enc = ex.encode(&vocab(), 8);
        let EncodedInput::Choices(pairs) = &enc.input else {
            panic!()
        };
        assert_eq!(
            pairs[0].token_strings,
            vec!["[CLS]", "a", "a", "a", "[SEP]", "b", "b", "[SEP]"]
        );
        assert!(pairs.iter().all(|p| p.len() <= 8));
    }
}
