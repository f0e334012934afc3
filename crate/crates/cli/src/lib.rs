//! Dataset ingestion, run configuration, pipeline orchestration and HTML
//! attribution reports for the `lexattr` command.

pub mod config;
pub mod ingest;
pub mod pipeline;
pub mod report;

pub use config::{ConfigError, RunConfig, Task};
pub use ingest::{ingest_casehold, ingest_overrule, IngestError, IngestReport, Reject, RowError};
pub use pipeline::{run_pipeline, Manifest, ManifestEntry, PipelineError, Stage};
pub use report::{render_report, Polarity, ReportDocument, ReportOptions, DISPLAY_EPSILON};
