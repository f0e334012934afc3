use std::io::Write;

use serde::{Deserialize, Serialize};

use super::AnalyticsError;
use crate::attribution::ScoredRecord;
use crate::tsv;

/// Population mean and standard deviation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub count: usize,
    pub mean: f64,
    pub std: f64,
}

impl Summary {
    /// Single pass (Welford); `None` for no values.
    pub fn from_values(values: impl IntoIterator<Item = f64>) -> Option<Self> {
        let mut count = 0usize;
        let mut mean = 0.0;
        let mut m2 = 0.0;
        for v in values {
            count += 1;
            let delta = v - mean;
            mean += delta / count as f64;
            m2 += delta * (v - mean);
        }
        (count > 0).then(|| Summary {
            count,
            mean,
            std: (m2 / count as f64).sqrt(),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistributionStats {
    pub model: String,
    pub prediction_probability: Summary,
    pub attribution_sum: Summary,
}

pub fn distribution_stats(
    groups: &[(&str, &[ScoredRecord])],
) -> Result<Vec<DistributionStats>, AnalyticsError> {
    groups
        .iter()
        .map(|(model, records)| {
            let empty = || AnalyticsError::EmptyGroup(model.to_string());
            Ok(DistributionStats {
                model: model.to_string(),
                prediction_probability: Summary::from_values(
                    records.iter().map(|r| r.prediction_probability),
                )
                .ok_or_else(empty)?,
                attribution_sum: Summary::from_values(records.iter().map(|r| r.attribution_sum))
                    .ok_or_else(empty)?,
            })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScatterRow {
    pub example_id: String,
    pub prediction_probability: f64,
    pub attribution_sum: f64,
    pub correct: bool,
}

pub fn scatter_export(records: &[ScoredRecord]) -> Vec<ScatterRow> {
    records
        .iter()
        .map(|r| ScatterRow {
            example_id: r.example_id.clone(),
            prediction_probability: r.prediction_probability,
            attribution_sum: r.attribution_sum,
            correct: r.correct,
        })
        .collect()
}

pub fn write_scatter(rows: &[ScatterRow], out: impl Write) -> Result<(), AnalyticsError> {
    let mut w = tsv::headerless_writer(out);
    w.write_record(["example_id", "prediction_probability", "attribution_sum", "correct"])?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}
