//! Integrated-gradients attribution over classifier input embeddings,
//! per-token aggregation and the completeness check.

mod ig;
mod io;
mod record;

pub use ig::{
    completeness_gap, integrate_path, normalized, token_scores, LinearScorer, PathFunction, PathIntegral,
    TargetProbability,
};
pub use io::{read_records, write_records};
pub use record::{
    attribute, attribute_dataset, completeness_check, integrated_gradients, AttributionConfig,
    AttributionFailure, AttributionRecord, AttributionRequest, Baseline, Completeness, RecordResult,
    ScoredRecord, TokenAttribution, DEFAULT_STEPS, DEFAULT_TOLERANCE,
};

use crate::model::ModelError;

#[derive(Debug, thiserror::Error)]
pub enum AttributionError {
    #[error("integration needs at least one step")]
    ZeroSteps,
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("worker pool: {0}")]
    WorkerPool(String),
    #[error("malformed record file: {0}")]
    Format(String),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
