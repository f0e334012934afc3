//! Uncased pre-tokenization: text cleanup, CJK isolation, accent stripping,
//! lowercasing, whitespace splitting and punctuation isolation.

use unicode_general_category::{get_general_category, GeneralCategory};
use unicode_normalization::UnicodeNormalization;

/// Splits `text` into normalized words.
///
/// Output words are lowercased and accent-free; whitespace runs separate
/// words; every punctuation character is a word of its own. No word is empty.
pub fn basic_tokenize(text: &str) -> Vec<String> {
    let cleaned = clean_and_pad(text);
    let mut words = Vec::new();
    for chunk in cleaned.split(char::is_whitespace) {
        if chunk.is_empty() {
            continue;
        }
        let normalized = normalize_chunk(chunk);
        split_punctuation(&normalized, &mut words);
    }
    words
}

/// Drops NUL, U+FFFD and control characters, maps whitespace to a space and
/// surrounds CJK ideographs with spaces.
fn clean_and_pad(text: &str) -> String {
    let mut out = String::with_capacity(text.len());
    for c in text.chars() {
        if c == '\0' || c == '\u{fffd}' || is_control(c) {
            continue;
        }
        if c.is_whitespace() {
            out.push(' ');
        } else if is_cjk(c) {
            out.push(' ');
            out.push(c);
            out.push(' ');
        } else {
            out.push(c);
        }
    }
    out
}

fn normalize_chunk(chunk: &str) -> String {
    let stripped: String = chunk
        .nfd()
        .filter(|&c| get_general_category(c) != GeneralCategory::NonspacingMark)
        .collect();
    stripped.to_lowercase()
}

fn split_punctuation(word: &str, out: &mut Vec<String>) {
    let mut current = String::new();
    for c in word.chars() {
        if is_punctuation(c) {
            if !current.is_empty() {
                out.push(std::mem::take(&mut current));
            }
            out.push(c.to_string());
        } else {
            current.push(c);
        }
    }
    if !current.is_empty() {
        out.push(current);
    }
}

fn is_control(c: char) -> bool {
    if matches!(c, '\t' | '\n' | '\r') {
        return false;
    }
    matches!(
        get_general_category(c),
        GeneralCategory::Control
            | GeneralCategory::Format
            | GeneralCategory::Surrogate
            | GeneralCategory::PrivateUse
            | GeneralCategory::Unassigned
    )
}

/// ASCII symbols such as `$`, `^` and `` ` `` count as punctuation alongside the
/// Unicode `P*` categories.
pub(crate) fn is_punctuation(c: char) -> bool {
    if c.is_ascii_punctuation() {
        return true;
    }
    matches!(
        get_general_category(c),
        GeneralCategory::ConnectorPunctuation
            | GeneralCategory::DashPunctuation
            | GeneralCategory::OpenPunctuation
            | GeneralCategory::ClosePunctuation
            | GeneralCategory::InitialPunctuation
            | GeneralCategory::FinalPunctuation
            | GeneralCategory::OtherPunctuation
    )
}

fn is_cjk(c: char) -> bool {
    matches!(c as u32,
        0x4E00..=0x9FFF
        | 0x3400..=0x4DBF
        | 0x20000..=0x2A6DF
        | 0x2A700..=0x2B73F
        | 0x2B740..=0x2B81F
        | 0x2B920..=0x2CEAF
        | 0xF900..=0xFAFF
        | 0x2F800..=0x2FA1F)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_and_blank() {
        assert!(basic_tokenize("").is_empty());
        assert!(basic_tokenize(" \t\n ").is_empty());
        assert_eq!(basic_tokenize("  a  "), vec!["a"]);
    }

    #[test]
    fn punctuation_isolated() {
        assert_eq!(
            basic_tokenize("The court, however."),
            vec!["the", "court", ",", "however", "."]
        );
        assert_eq!(basic_tokenize("$75,000"), vec!["$", "75", ",", "000"]);
    }

    #[test]
    fn accents_and_case() {
        assert_eq!(basic_tokenize("Café NAÏVE"), vec!["cafe", "naive"]);
    }

    #[test]
    fn cjk_split_per_char() {
        assert_eq!(basic_tokenize("東京x"), vec!["東", "京", "x"]);
    }

    #[test]
    fn control_chars_removed() {
        assert_eq!(basic_tokenize("a\u{0}b\u{200b}c\u{fffd}"), vec!["abc"]);
    }
}
