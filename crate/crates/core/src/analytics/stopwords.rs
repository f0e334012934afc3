use std::collections::BTreeSet;
use std::path::Path;

use super::AnalyticsError;
use crate::tokenizer::decode_piece;

pub type Stoplist = BTreeSet<String>;

/// One word per line; blank lines ignored, words lowercased.
pub fn parse_stoplist(text: &str) -> Stoplist {
    text.lines()
        .map(|l| l.trim().to_lowercase())
        .filter(|l| !l.is_empty())
        .collect()
}

pub fn load_stoplist(path: impl AsRef<Path>) -> Result<Stoplist, AnalyticsError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|source| AnalyticsError::Io {
        path: path.display().to_string(),
        source,
    })?;
    Ok(parse_stoplist(&text))
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct StopwordSplit {
    pub stop: BTreeSet<String>,
    pub content: BTreeSet<String>,
}

/// Splits tokens by stoplist membership of their decoded form (`##`
/// stripped). The returned sets hold the tokens as given.
pub fn stopword_split<'a>(tokens: impl IntoIterator<Item = &'a str>, stoplist: &Stoplist) -> StopwordSplit {
    let mut split = StopwordSplit::default();
    for t in tokens {
        if stoplist.contains(decode_piece(t)) {
            split.stop.insert(t.to_string());
        } else {
            split.content.insert(t.to_string());
        }
    }
    split
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn splits() {
        let stop = parse_stoplist("the\n\n  A \n");
        assert_eq!(stop.len(), 2);
        let s = stopword_split(["the", "court", "##a"], &stop);
        assert_eq!(s.stop, BTreeSet::from(["the".to_string(), "##a".to_string()]));
        assert_eq!(s.content, BTreeSet::from(["court".to_string()]));
        let s = stopword_split(["the", "court"], &Stoplist::new());
        assert!(s.stop.is_empty());
        assert_eq!(s.content.len(), 2);
    }
}
