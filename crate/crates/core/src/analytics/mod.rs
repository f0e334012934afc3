//! Corpus and cross-model analytics: token frequencies, vocabulary overlap
//! partitions, stop-word splits, attribution histograms, distribution
//! statistics and correctness sets.

mod export;
mod frequency;
mod histogram;
mod partition;
mod stats;
mod stopwords;

pub use export::{
    write_correctness, write_coverage, write_frequencies, write_histograms, write_partition, write_stats,
};
pub use frequency::{model_token_coverage, token_frequencies, CoverageRow, FrequencyMode, FrequencyTable};
pub use histogram::{attribution_histogram, histogram, Histogram, TokenHistograms, Window, DEFAULT_BIN_WIDTH};
pub use partition::{
    correctness_sets, oracle_ceiling, partition_sets, vocab_overlap, CorrectnessMatrix, CorrectnessReport,
    PartitionReport, SourceMask, MAX_SOURCES,
};
pub use stats::{distribution_stats, scatter_export, write_scatter, DistributionStats, ScatterRow, Summary};
pub use stopwords::{load_stoplist, parse_stoplist, stopword_split, Stoplist, StopwordSplit};

use crate::tokenizer::TokenizerError;

#[derive(Debug, thiserror::Error)]
pub enum AnalyticsError {
    #[error("need at least {needed} sources, found {found}")]
    TooFewSources { needed: usize, found: usize },
    #[error("at most {MAX_SOURCES} sources are supported, found {found}")]
    TooManySources { found: usize },
    #[error("correctness matrix has no models")]
    NoModels,
    #[error("row {row} has {found} entries, expected {expected}")]
    RaggedMatrix { row: usize, expected: usize, found: usize },
    #[error("bin width must be positive and finite, got {0}")]
    NonpositiveBin(f64),
    #[error("window [{lo}, {hi}] is empty")]
    InvalidWindow { lo: f64, hi: f64 },
    #[error("group {0:?} has no records")]
    EmptyGroup(String),
    #[error(transparent)]
    Tokenizer(#[from] TokenizerError),
    #[error("failed to read {path}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Write(#[from] std::io::Error),
}
