//! Command orchestration: loading inputs, running the per-document
//! analysis and writing deterministic tables and viewer bundles.

mod commands;
pub mod format;
mod pipeline;
mod serve;
mod tables;
mod viz;

use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::ingest::IngestError;

pub use commands::{
    cmd_agreement, cmd_compare, cmd_coref, cmd_correlate, cmd_export_viz, cmd_pairwise, correlation_rows, AgreementRow,
    Config, CorefRow, CorrelationRow, SortKey,
};
pub use pipeline::{
    analyze, family_attention, human_attention, AnalysisOptions, Corpus, DocAnalysis, HumanAttention, InputPaths,
    ParticipantTrack,
};
pub use serve::Server;
pub use tables::{comparison_rows, read_compare_csv, sort_rows, write_compare_csv, ComparisonRow};
pub use viz::{VizBundle, VIZ_INDEX};

/// Version string stamped into viewer bundles.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Error)]
pub enum ReportError {
    #[error(transparent)]
    Ingest(#[from] IngestError),
    #[error("missing required input {0}")]
    MissingInput(&'static str),
    #[error("document `{doc_id}` is missing from {input}")]
    MissingDocument { input: String, doc_id: String },
    #[error("{input} references unknown document `{doc_id}`")]
    UnknownDocument { input: String, doc_id: String },
    #[error("document `{doc_id}`: {reason}")]
    Document { doc_id: String, reason: String },
    #[error("inconsistent inputs: {0}")]
    Inconsistent(String),
    #[error("{}: line {line}: {reason}", path.display())]
    Table { path: PathBuf, line: usize, reason: String },
    #[error("statistical precondition failed: {0}")]
    Precondition(String),
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl ReportError {
    /// Process exit code: 2 for input or validation problems, 3 for
    /// statistical preconditions, 1 for output failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            ReportError::Precondition(_) => 3,
            ReportError::Io { .. } => 1,
            _ => 2,
        }
    }

    pub(crate) fn doc(doc_id: &str, reason: impl ToString) -> Self {
        ReportError::Document {
            doc_id: doc_id.to_string(),
            reason: reason.to_string(),
        }
    }

    pub(crate) fn io(path: &Path, source: std::io::Error) -> Self {
        ReportError::Io {
            path: path.to_path_buf(),
            source,
        }
    }
}

pub(crate) fn write_output(path: &Path, content: &str) -> Result<(), ReportError> {
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent).map_err(|e| ReportError::io(parent, e))?;
    }
    std::fs::write(path, content).map_err(|e| ReportError::io(path, e))
}

/// Runs `f` on a dedicated pool with `threads` workers, or on the global
/// pool when `threads` is `None`.
pub fn with_threads<T: Send>(threads: Option<usize>, f: impl FnOnce() -> T + Send) -> T {
    match threads {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n.max(1))
            .build()
            .expect("thread pool")
            .install(f),
        None => f(),
    }
}
