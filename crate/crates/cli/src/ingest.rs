//! Dataset readers for the overrule (binary) and casehold (multiple choice)
//! tasks.
//!
//! Canonical input is a delimited UTF-8 file with a header row (comma, or tab
//! for `.tsv`); a JSON-lines mirror (`.jsonl`/`.json`) is accepted too.
//!
//! Overrule columns: `label` (0/1) and `sentence` (`sentence1` and `text` are
//! accepted aliases), in any order; an `id` column is optional.
//!
//! Casehold columns: `id` (or `example_id`), `citing_prompt` (or `context`),
//! `holding_0` .. `holding_4`, `label`. Any other holding layout is rejected
//! with [`IngestError::Header`].
//!
//! Bad rows are reported as [`Reject`]s with their line number, so
//! `rows = examples + rejects`; with `strict` the first bad row is an error.

use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;

use lexattr_core::model::{Example, NUM_CHOICES};
use serde_json::Value;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum RowError {
    #[error("line {line}: label {value:?} is not 0 or 1")]
    BadLabel { line: u64, value: String },
    #[error("line {line}: empty {column}")]
    EmptySentence { line: u64, column: String },
    #[error("line {line}: expected {NUM_CHOICES} options, found {found}")]
    OptionCount { line: u64, found: usize },
    #[error("line {line}: answer index {value:?} outside [0, {NUM_CHOICES})")]
    AnswerRange { line: u64, value: String },
    #[error("line {line}: {message}")]
    Malformed { line: u64, message: String },
}

impl RowError {
    pub fn line(&self) -> u64 {
        match self {
            RowError::BadLabel { line, .. }
            | RowError::EmptySentence { line, .. }
            | RowError::OptionCount { line, .. }
            | RowError::AnswerRange { line, .. }
            | RowError::Malformed { line, .. } => *line,
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum IngestError {
    #[error("failed to read {path}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: header {found:?} does not match the expected columns ({expected})")]
    Header {
        path: String,
        expected: &'static str,
        found: Vec<String>,
    },
    #[error("{path}")]
    Csv {
        path: String,
        #[source]
        source: csv::Error,
    },
    #[error("{path}")]
    Row {
        path: String,
        #[source]
        source: RowError,
    },
}

/// A row that could not be turned into an example.
pub type Reject = RowError;

#[derive(Debug, Clone, Default, PartialEq)]
pub struct IngestReport {
    pub examples: Vec<Example>,
    pub rejects: Vec<Reject>,
}

impl IngestReport {
    /// Data rows seen (header and blank JSON lines excluded).
    pub fn rows(&self) -> usize {
        self.examples.len() + self.rejects.len()
    }
}

const OVERRULE_HEADER: &str = "label, sentence [, id]";
const CASEHOLD_HEADER: &str = "id, citing_prompt, holding_0, holding_1, holding_2, holding_3, holding_4, label";

pub fn ingest_overrule(path: impl AsRef<Path>, strict: bool) -> Result<IngestReport, IngestError> {
    let path = path.as_ref();
    let (header, rows) = read_rows(path)?;
    let cols = header
        .map(|h| overrule_columns(&h).ok_or_else(|| header_error(path, OVERRULE_HEADER, &h)))
        .transpose()?;
    collect(path, strict, rows, |row| overrule_row(row, cols))
}

pub fn ingest_casehold(path: impl AsRef<Path>, strict: bool) -> Result<IngestReport, IngestError> {
    let path = path.as_ref();
    let (header, rows) = read_rows(path)?;
    let cols = header
        .map(|h| casehold_columns(&h).ok_or_else(|| header_error(path, CASEHOLD_HEADER, &h)))
        .transpose()?;
    collect(path, strict, rows, |row| casehold_row(row, cols.as_ref()))
}

fn header_error(path: &Path, expected: &'static str, header: &[String]) -> IngestError {
    IngestError::Header {
        path: path.display().to_string(),
        expected,
        found: header.to_vec(),
    }
}

fn collect(
    path: &Path,
    strict: bool,
    rows: Vec<Row>,
    parse: impl Fn(&Row) -> Result<Example, RowError>,
) -> Result<IngestReport, IngestError> {
    let mut report = IngestReport::default();
    for row in &rows {
        match parse(row) {
            Ok(ex) => report.examples.push(ex),
            Err(e) if strict => {
                return Err(IngestError::Row {
                    path: path.display().to_string(),
                    source: e,
                })
            }
            Err(e) => report.rejects.push(e),
        }
    }
    Ok(report)
}

enum Fields {
    Delimited(Vec<String>),
    Json(Result<serde_json::Map<String, Value>, String>),
}

struct Row {
    line: u64,
    fields: Fields,
}

fn is_jsonl(path: &Path) -> bool {
    matches!(
        path.extension().and_then(|e| e.to_str()).map(str::to_ascii_lowercase).as_deref(),
        Some("jsonl" | "json")
    )
}

/// Header (delimited files only) and data rows.
fn read_rows(path: &Path) -> Result<(Option<Vec<String>>, Vec<Row>), IngestError> {
    let io = |source| IngestError::Io {
        path: path.display().to_string(),
        source,
    };
    let file = File::open(path).map_err(io)?;
    if is_jsonl(path) {
        let mut rows = Vec::new();
        for (i, line) in BufReader::new(file).lines().enumerate() {
            let line_text = line.map_err(io)?;
            if line_text.trim().is_empty() {
                continue;
            }
            let parsed = match serde_json::from_str::<Value>(&line_text) {
                Ok(Value::Object(map)) => Ok(map),
                Ok(_) => Err("expected a JSON object".to_string()),
                Err(e) => Err(e.to_string()),
            };
            rows.push(Row {
                line: i as u64 + 1,
                fields: Fields::Json(parsed),
            });
        }
        return Ok((None, rows));
    }
    let tsv = path.extension().is_some_and(|e| e.eq_ignore_ascii_case("tsv"));
    let mut reader = csv::ReaderBuilder::new()
        .delimiter(if tsv { b'\t' } else { b',' })
        .flexible(true)
        .from_reader(file);
    let csv_err = |source| IngestError::Csv {
        path: path.display().to_string(),
        source,
    };
    let header: Vec<String> = reader
        .headers()
        .map_err(csv_err)?
        .iter()
        .map(|h| h.trim().to_string())
        .collect();
    let mut rows = Vec::new();
    for record in reader.records() {
        let record = record.map_err(csv_err)?;
        let line = record.position().map_or(0, |p| p.line());
        rows.push(Row {
            line,
            fields: Fields::Delimited(record.iter().map(String::from).collect()),
        });
    }
    Ok((Some(header), rows))
}

fn position(header: &[String], names: &[&str]) -> Option<usize> {
    header.iter().position(|h| names.iter().any(|n| h.eq_ignore_ascii_case(n)))
}

#[derive(Clone, Copy)]
struct OverruleColumns {
    label: usize,
    sentence: usize,
    id: Option<usize>,
}

fn overrule_columns(header: &[String]) -> Option<OverruleColumns> {
    Some(OverruleColumns {
        label: position(header, &["label"])?,
        sentence: position(header, &["sentence", "sentence1", "text"])?,
        id: position(header, &["id", "example_id"]),
    })
}

#[derive(Clone)]
struct CaseholdColumns {
    id: usize,
    context: usize,
    holdings: Vec<usize>,
    label: usize,
}

fn casehold_columns(header: &[String]) -> Option<CaseholdColumns> {
    let holding_like = header.iter().filter(|h| h.to_ascii_lowercase().starts_with("holding_")).count();
    if holding_like != NUM_CHOICES {
        return None;
    }
    let holdings = (0..NUM_CHOICES)
        .map(|i| position(header, &[&format!("holding_{i}")]))
        .collect::<Option<Vec<_>>>()?;
    Some(CaseholdColumns {
        id: position(header, &["id", "example_id"])?,
        context: position(header, &["citing_prompt", "context"])?,
        holdings,
        label: position(header, &["label"])?,
    })
}

fn field(fields: &[String], i: usize) -> &str {
    fields.get(i).map_or("", |s| s.as_str())
}

/// String form of a JSON scalar; numbers keep their literal text.
fn json_text(map: &serde_json::Map<String, Value>, keys: &[&str]) -> Option<String> {
    keys.iter().find_map(|k| match map.get(*k)? {
        Value::String(s) => Some(s.clone()),
        Value::Number(n) => Some(n.to_string()),
        Value::Bool(b) => Some(b.to_string()),
        _ => None,
    })
}

fn default_id(line: u64) -> String {
    format!("line-{line}")
}

fn overrule_row(row: &Row, cols: Option<OverruleColumns>) -> Result<Example, RowError> {
    let line = row.line;
    let (label, sentence, id) = match (&row.fields, cols) {
        (Fields::Delimited(f), Some(c)) => (
            field(f, c.label).to_string(),
            field(f, c.sentence).to_string(),
            c.id.map(|i| field(f, i).to_string()),
        ),
        (Fields::Json(Ok(map)), _) => (
            json_text(map, &["label"]).unwrap_or_default(),
            json_text(map, &["sentence", "sentence1", "text"]).unwrap_or_default(),
            json_text(map, &["id", "example_id"]),
        ),
        (Fields::Json(Err(message)), _) => {
            return Err(RowError::Malformed {
                line,
                message: message.clone(),
            })
        }
        (Fields::Delimited(_), None) => unreachable!("delimited rows always carry columns"),
    };
    let label = match label.trim() {
        "0" => 0,
        "1" => 1,
        _ => return Err(RowError::BadLabel { line, value: label }),
    };
    if sentence.trim().is_empty() {
        return Err(RowError::EmptySentence {
            line,
            column: "sentence".into(),
        });
    }
    let id = id.filter(|s| !s.trim().is_empty()).unwrap_or_else(|| default_id(line));
    Example::binary(id, sentence, label).map_err(|e| RowError::Malformed {
        line,
        message: e.to_string(),
    })
}

fn casehold_row(row: &Row, cols: Option<&CaseholdColumns>) -> Result<Example, RowError> {
    let line = row.line;
    let (id, context, options, label) = match (&row.fields, cols) {
        (Fields::Delimited(f), Some(c)) => {
            let options: Vec<String> = c
                .holdings
                .iter()
                .map(|&i| field(f, i).to_string())
                .filter(|s| !s.trim().is_empty())
                .collect();
            (
                field(f, c.id).to_string(),
                field(f, c.context).to_string(),
                options,
                field(f, c.label).to_string(),
            )
        }
        (Fields::Json(Ok(map)), _) => {
            let options: Vec<String> = match map.get("holdings") {
                Some(Value::Array(items)) => items.iter().filter_map(|v| v.as_str().map(String::from)).collect(),
                _ => (0..NUM_CHOICES)
                    .filter_map(|i| json_text(map, &[&format!("holding_{i}")]))
                    .collect(),
            };
            (
                json_text(map, &["id", "example_id"]).unwrap_or_default(),
                json_text(map, &["citing_prompt", "context"]).unwrap_or_default(),
                options.into_iter().filter(|s| !s.trim().is_empty()).collect(),
                json_text(map, &["label"]).unwrap_or_default(),
            )
        }
        (Fields::Json(Err(message)), _) => {
            return Err(RowError::Malformed {
                line,
                message: message.clone(),
            })
        }
        (Fields::Delimited(_), None) => unreachable!("delimited rows always carry columns"),
    };
    if options.len() != NUM_CHOICES {
        return Err(RowError::OptionCount {
            line,
            found: options.len(),
        });
    }
    let answer = match label.trim().parse::<usize>() {
        Ok(a) if a < NUM_CHOICES => a,
        _ => return Err(RowError::AnswerRange { line, value: label }),
    };
    if context.trim().is_empty() {
        return Err(RowError::EmptySentence {
            line,
            column: "citing_prompt".into(),
        });
    }
    let id = if id.trim().is_empty() { default_id(line) } else { id };
    Example::multiple_choice(id, context, options, answer).map_err(|e| RowError::Malformed {
        line,
        message: e.to_string(),
    })
}
