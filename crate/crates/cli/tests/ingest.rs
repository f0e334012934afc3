use std::io::Write;
use std::path::Path;

use lexattr_cli::ingest::{ingest_casehold, ingest_overrule, IngestError};
use lexattr_core::model::TaskKind;
use proptest::prelude::*;

fn write(dir: &Path, name: &str, body: &str) -> std::path::PathBuf {
    let path = dir.join(name);
    std::fs::File::create(&path).unwrap().write_all(body.as_bytes()).unwrap();
    path
}

#[derive(Debug, Clone)]
enum Row {
    Good(u8, String),
    BadLabel(String),
    Empty,
}

fn row() -> impl Strategy<Value = Row> {
    prop_oneof![
        4 => (0u8..2, "[a-z]{1,6}( [a-z]{1,6}){0,5}").prop_map(|(l, s)| Row::Good(l, s)),
        1 => r"2|yes|-1|0\.5".prop_map(Row::BadLabel),
        1 => Just(Row::Empty),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    /// Every data row is either an example or a reject carrying its line.
    #[test]
    fn overrule_rows_are_conserved(rows in prop::collection::vec(row(), 0..60)) {
        let dir = tempfile::tempdir().unwrap();
        let mut body = String::from("label,sentence\n");
        for r in &rows {
            match r {
                Row::Good(l, s) => body.push_str(&format!("{l},{s}\n")),
                Row::BadLabel(l) => body.push_str(&format!("{l},some text\n")),
                Row::Empty => body.push_str("1,\n"),
            }
        }
        let path = write(dir.path(), "o.csv", &body);
        let report = ingest_overrule(&path, false).unwrap();
        prop_assert_eq!(report.rows(), rows.len());
        let bad_lines: Vec<u64> = rows
            .iter()
            .enumerate()
            .filter(|(_, r)| !matches!(r, Row::Good(..)))
            .map(|(i, _)| i as u64 + 2)
            .collect();
        let reject_lines: Vec<u64> = report.rejects.iter().map(|r| r.line()).collect();
        prop_assert_eq!(reject_lines, bad_lines.clone());
        let good: Vec<(usize, String)> = rows
            .iter()
            .filter_map(|r| match r {
                Row::Good(l, s) => Some((*l as usize, s.clone())),
                _ => None,
            })
            .collect();
        let got: Vec<(usize, String)> = report.examples.iter().map(|e| (e.label(), e.texts()[0].to_string())).collect();
        prop_assert_eq!(got, good);

        let strict = ingest_overrule(&path, true);
        prop_assert_eq!(strict.is_err(), !bad_lines.is_empty());
    }
}

#[test]
fn casehold_csv_and_jsonl_agree() {
    let dir = tempfile::tempdir().unwrap();
    let csv = write(
        dir.path(),
        "c.csv",
        "id,citing_prompt,holding_0,holding_1,holding_2,holding_3,holding_4,label\n\
         a,\"the court, sitting en banc\",h0,h1,h2,h3,h4,3\n\
         b,ctx,h0,h1,h2,h3,h4,7\n\
         c,ctx,h0,h1,,h3,h4,0\n",
    );
    let jsonl = write(
        dir.path(),
        "c.jsonl",
        "{\"id\":\"a\",\"citing_prompt\":\"the court, sitting en banc\",\"holdings\":[\"h0\",\"h1\",\"h2\",\"h3\",\"h4\"],\"label\":3}\n\
         {\"id\":\"b\",\"citing_prompt\":\"ctx\",\"holdings\":[\"h0\",\"h1\",\"h2\",\"h3\",\"h4\"],\"label\":7}\n\
         \n\
         {\"id\":\"c\",\"citing_prompt\":\"ctx\",\"holdings\":[\"h0\",\"h1\",\"h2\",\"h3\"],\"label\":0}\n",
    );
    let a = ingest_casehold(&csv, false).unwrap();
    let b = ingest_casehold(&jsonl, false).unwrap();
    assert_eq!(a.examples, b.examples);
    assert_eq!(a.examples.len(), 1);
    let ex = &a.examples[0];
    assert_eq!((ex.id(), ex.label(), ex.kind()), ("a", 3, TaskKind::MultipleChoice));
    assert_eq!(ex.texts()[0], "the court, sitting en banc");
    assert_eq!(a.rows(), 3);
    assert_eq!(b.rows(), 3);
    assert_eq!(a.rejects.iter().map(|r| r.line()).collect::<Vec<_>>(), [3, 4]);
}

#[test]
fn wrong_holding_columns_are_a_header_error() {
    let dir = tempfile::tempdir().unwrap();
    let path = write(
        dir.path(),
        "c.csv",
        "id,citing_prompt,holding_0,holding_1,holding_2,holding_3,label\na,ctx,h0,h1,h2,h3,0\n",
    );
    assert!(matches!(ingest_casehold(&path, false), Err(IngestError::Header { .. })));
}

#[test]
fn tsv_and_missing_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = write(dir.path(), "o.tsv", "sentence\tlabel\nwe overrule it, today\t1\n");
    let report = ingest_overrule(&path, true).unwrap();
    assert_eq!(report.examples[0].texts(), ["we overrule it, today"]);
    assert!(matches!(
        ingest_overrule(dir.path().join("absent.csv"), false),
        Err(IngestError::Io { .. })
    ));
}
