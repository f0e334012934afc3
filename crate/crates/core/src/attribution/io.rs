//! Tab-separated record files.
//!
//! The record file has one row per example, in dataset order:
//!
//! ```text
//! example_id  status  prediction_probability  attribution_sum  correct
//! completeness_gap  predicted_class  target  target_probability
//! baseline_probability  error
//! ```
//!
//! `status` is `ok` or `error`; failed rows leave the numeric fields empty
//! and carry the message in `error`. The token sidecar has one row per token
//! position of every successful record:
//!
//! ```text
//! example_id  position  segment  token  token_id  is_special  score
//! ```
//!
//! Floats are written in shortest round-trip form, so reading a pair of
//! files back yields bit-identical records.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use super::record::{AttributionFailure, RecordResult, ScoredRecord, TokenAttribution};
use super::AttributionError;
use crate::tokenizer::TokenId;
use crate::tsv;

#[derive(Debug, Serialize, Deserialize)]
struct RecordRow {
    example_id: String,
    status: String,
    prediction_probability: Option<f64>,
    attribution_sum: Option<f64>,
    correct: Option<bool>,
    completeness_gap: Option<f64>,
    predicted_class: Option<usize>,
    target: Option<usize>,
    target_probability: Option<f64>,
    baseline_probability: Option<f64>,
    error: Option<String>,
}

#[derive(Debug, Serialize, Deserialize)]
struct TokenRow {
    example_id: String,
    position: usize,
    segment: usize,
    token: String,
    token_id: TokenId,
    is_special: bool,
    score: f64,
}

pub fn write_records(
    records: &[RecordResult],
    record_out: impl Write,
    token_out: impl Write,
) -> Result<(), AttributionError> {
    let mut rw = tsv::writer(record_out);
    let mut tw = tsv::writer(token_out);
    if records.is_empty() {
        rw.write_record([
            "example_id",
            "status",
            "prediction_probability",
            "attribution_sum",
            "correct",
            "completeness_gap",
            "predicted_class",
            "target",
            "target_probability",
            "baseline_probability",
            "error",
        ])?;
    }
    if !records.iter().any(|r| r.is_ok()) {
        tw.write_record([
            "example_id",
            "position",
            "segment",
            "token",
            "token_id",
            "is_special",
            "score",
        ])?;
    }
    for r in records {
        match r {
            Ok(s) => {
                rw.serialize(RecordRow {
                    example_id: s.example_id.clone(),
                    status: "ok".into(),
                    prediction_probability: Some(s.prediction_probability),
                    attribution_sum: Some(s.attribution_sum),
                    correct: Some(s.correct),
                    completeness_gap: Some(s.completeness_gap),
                    predicted_class: Some(s.predicted_class),
                    target: Some(s.target),
                    target_probability: Some(s.target_probability),
                    baseline_probability: Some(s.baseline_probability),
                    error: None,
                })?;
                for (position, t) in s.tokens.iter().enumerate() {
                    tw.serialize(TokenRow {
                        example_id: s.example_id.clone(),
                        position,
                        segment: t.segment,
                        token: t.token.clone(),
                        token_id: t.token_id,
                        is_special: t.is_special,
                        score: t.score,
                    })?;
                }
            }
            Err(f) => rw.serialize(RecordRow {
                example_id: f.example_id.clone(),
                status: "error".into(),
                prediction_probability: None,
                attribution_sum: None,
                correct: None,
                completeness_gap: None,
                predicted_class: None,
                target: None,
                target_probability: None,
                baseline_probability: None,
                error: Some(f.message.clone()),
            })?,
        }
    }
    rw.flush()?;
    tw.flush()?;
    Ok(())
}

fn missing(field: &str, id: &str) -> AttributionError {
    AttributionError::Format(format!("record {id}: missing {field}"))
}

pub fn read_records(record_in: impl Read, token_in: impl Read) -> Result<Vec<RecordResult>, AttributionError> {
    let mut out = Vec::new();
    for row in tsv::reader(record_in).deserialize() {
        let row: RecordRow = row?;
        let id = row.example_id.clone();
        let rec = match row.status.as_str() {
            "ok" => Ok(ScoredRecord {
                prediction_probability: row
                    .prediction_probability
                    .ok_or_else(|| missing("prediction_probability", &id))?,
                attribution_sum: row.attribution_sum.ok_or_else(|| missing("attribution_sum", &id))?,
                correct: row.correct.ok_or_else(|| missing("correct", &id))?,
                completeness_gap: row.completeness_gap.ok_or_else(|| missing("completeness_gap", &id))?,
                predicted_class: row.predicted_class.ok_or_else(|| missing("predicted_class", &id))?,
                target: row.target.ok_or_else(|| missing("target", &id))?,
                target_probability: row
                    .target_probability
                    .ok_or_else(|| missing("target_probability", &id))?,
                baseline_probability: row
                    .baseline_probability
                    .ok_or_else(|| missing("baseline_probability", &id))?,
                example_id: row.example_id,
                tokens: Vec::new(),
            }),
            "error" => Err(AttributionFailure {
                example_id: row.example_id,
                message: row.error.unwrap_or_default(),
            }),
            other => {
                return Err(AttributionError::Format(format!(
                    "record {id}: unknown status {other:?}"
                )))
            }
        };
        out.push(rec);
    }

    let mut cursor = 0;
    for row in tsv::reader(token_in).deserialize() {
        let row: TokenRow = row?;
        // Token rows arrive grouped by record, in record order; position 0
        // starts a new record even if an id repeats.
        while cursor < out.len()
            && !matches!(&out[cursor], Ok(r) if r.example_id == row.example_id
                && (row.position != 0 || r.tokens.is_empty()))
        {
            cursor += 1;
        }
        let Some(Ok(rec)) = out.get_mut(cursor) else {
            return Err(AttributionError::Format(format!(
                "token row for unknown or out-of-order record {}",
                row.example_id
            )));
        };
        if row.position != rec.tokens.len() {
            return Err(AttributionError::Format(format!(
                "record {}: token position {} out of sequence",
                row.example_id, row.position
            )));
        }
        rec.tokens.push(TokenAttribution {
            token: row.token,
            token_id: row.token_id,
            is_special: row.is_special,
            segment: row.segment,
            score: row.score,
        });
    }
    Ok(out)
}
