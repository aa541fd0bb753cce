//! Parsers and writers for every on-disk input format.
//!
//! Each parser either returns fully validated records or a located error;
//! nothing partially constructed escapes. Writers emit the same formats so
//! parsed data can be re-serialized and parsed back unchanged.

mod attention;
mod coref;
mod gaze;
mod stimulus;
mod tables;

use std::fs;
use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::model::DocumentError;

pub use attention::{parse_model_attention, parse_model_attention_str, write_model_attention};
pub use coref::{parse_coref, parse_coref_str, write_coref};
pub use gaze::{parse_gaze, parse_gaze_str, write_gaze, GAZE_HEADER};
pub use stimulus::{parse_stimulus, parse_stimulus_dir, parse_stimulus_str, write_stimulus, STIMULUS_HEADER};
pub use tables::{
    parse_answers, parse_answers_str, parse_outcomes, parse_outcomes_str, write_answers, write_outcomes,
    ANSWERS_HEADER, OUTCOMES_HEADER,
};

/// What went wrong while reading a file. Line numbers are 1-based and count
/// the header line.
#[derive(Debug, Error)]
pub enum ErrorKind {
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("file is empty (missing header)")]
    MissingHeader,
    #[error("header is missing required column `{0}`")]
    MissingColumn(String),
    #[error("line {line}: {reason}")]
    MalformedLine { line: usize, reason: String },
    #[error("line {line}: duplicate token id {token_id}")]
    DuplicateTokenId { line: usize, token_id: usize },
    #[error("boxes of tokens {0} and {1} overlap")]
    OverlappingBoxes(usize, usize),
    #[error("token {0}: character offsets do not slice to the token text")]
    OffsetMismatch(usize),
    #[error("invalid document: {0}")]
    Document(DocumentError),
    #[error("line {0}: fixation duration must be positive")]
    NegativeDuration(usize),
    #[error("line {0}: non-finite coordinate or timestamp")]
    NonFiniteCoordinate(usize),
    #[error("line {line}: value out of range: {reason}")]
    OutOfRange { line: usize, reason: String },
    #[error("line {line}: invalid JSON: {source}")]
    Json {
        line: usize,
        #[source]
        source: serde_json::Error,
    },
    #[error("line {line}: duplicate record {key}")]
    DuplicateRecord { line: usize, key: String },
}

impl From<DocumentError> for ErrorKind {
    fn from(err: DocumentError) -> Self {
        match err {
            DocumentError::OverlappingBoxes(a, b) => ErrorKind::OverlappingBoxes(a, b),
            DocumentError::OffsetMismatch(t) => ErrorKind::OffsetMismatch(t),
            other => ErrorKind::Document(other),
        }
    }
}

pub(crate) fn malformed(line: usize, reason: impl Into<String>) -> ErrorKind {
    ErrorKind::MalformedLine {
        line,
        reason: reason.into(),
    }
}

/// A parse failure tied to the file it came from.
#[derive(Debug, Error)]
#[error("{}: {kind}", path.display())]
pub struct IngestError {
    pub path: PathBuf,
    pub kind: ErrorKind,
}

impl IngestError {
    pub fn new(path: impl Into<PathBuf>, kind: ErrorKind) -> Self {
        Self {
            path: path.into(),
            kind,
        }
    }
}

pub(crate) fn read_file(path: &Path) -> Result<String, IngestError> {
    fs::read_to_string(path).map_err(|e| IngestError::new(path, ErrorKind::Io(e)))
}

pub(crate) fn at_path<T>(path: &Path, res: Result<T, ErrorKind>) -> Result<T, IngestError> {
    res.map_err(|kind| IngestError::new(path, kind))
}

/// Column lookup for a delimited header row. Unknown columns are tolerated
/// with a warning.
#[derive(Debug, Clone)]
pub(crate) struct Header {
    indices: Vec<usize>,
    width: usize,
}

impl Header {
    pub(crate) fn parse<'a>(
        fields: impl Iterator<Item = &'a str>,
        required: &[&str],
        optional: &[&str],
    ) -> Result<Self, ErrorKind> {
        let names: Vec<&str> = fields.map(str::trim).collect();
        let mut indices = Vec::with_capacity(required.len() + optional.len());
        for col in required {
            let idx = names
                .iter()
                .position(|n| n == col)
                .ok_or_else(|| ErrorKind::MissingColumn(col.to_string()))?;
            indices.push(idx);
        }
        for col in optional {
            indices.push(names.iter().position(|n| n == col).unwrap_or(usize::MAX));
        }
        for name in &names {
            if !required.contains(name) && !optional.contains(name) {
                log::warn!("ignoring unknown column `{name}`");
            }
        }
        Ok(Self {
            indices,
            width: names.len(),
        })
    }

    pub(crate) fn width(&self) -> usize {
        self.width
    }

    /// Field for the `i`-th declared column (required first, then optional).
    pub(crate) fn get<'a>(&self, fields: &[&'a str], i: usize) -> Option<&'a str> {
        fields.get(self.indices[i]).copied()
    }
}

pub(crate) fn parse_field<T: std::str::FromStr>(raw: Option<&str>, line: usize, column: &str) -> Result<T, ErrorKind> {
    let raw = raw.ok_or_else(|| malformed(line, format!("missing `{column}`")))?;
    raw.trim()
        .parse()
        .map_err(|_| malformed(line, format!("cannot parse `{column}` from `{raw}`")))
}
