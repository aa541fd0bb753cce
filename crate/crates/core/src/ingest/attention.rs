use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::{at_path, malformed, read_file, ErrorKind, IngestError};
use crate::model::{AttentionEntries, Family, MatrixRow, ModelAttentionFile, SpanWeight, WordWeight};

#[derive(Deserialize)]
struct RawLine {
    model_id: String,
    family: String,
    doc_id: String,
    granularity: String,
    entries: Value,
    #[serde(flatten)]
    extra: BTreeMap<String, Value>,
}

#[derive(Serialize)]
struct OutLine<'a, E: Serialize> {
    model_id: &'a str,
    family: Family,
    doc_id: &'a str,
    granularity: &'static str,
    entries: &'a E,
}

pub fn parse_model_attention(path: &Path) -> Result<Vec<ModelAttentionFile>, IngestError> {
    let content = read_file(path)?;
    at_path(path, parse_model_attention_str(&content))
}

/// One JSON object per line, one line per `(model_id, doc_id)`.
pub fn parse_model_attention_str(content: &str) -> Result<Vec<ModelAttentionFile>, ErrorKind> {
    let mut out = Vec::new();
    let mut keys: HashSet<(String, String)> = HashSet::new();
    for (idx, raw) in content.lines().enumerate() {
        let line = idx + 1;
        if raw.trim().is_empty() {
            continue;
        }
        let parsed: RawLine = serde_json::from_str(raw).map_err(|source| ErrorKind::Json { line, source })?;
        for key in parsed.extra.keys() {
            log::warn!("line {line}: ignoring unknown field `{key}`");
        }
        let family: Family = parsed.family.parse().map_err(|e| malformed(line, format!("{e}")))?;
        let entries = parse_entries(&parsed.granularity, parsed.entries, line)?;
        if !keys.insert((parsed.model_id.clone(), parsed.doc_id.clone())) {
            return Err(ErrorKind::DuplicateRecord {
                line,
                key: format!("({}, {})", parsed.model_id, parsed.doc_id),
            });
        }
        out.push(ModelAttentionFile {
            model_id: parsed.model_id,
            family,
            doc_id: parsed.doc_id,
            entries,
        });
    }
    Ok(out)
}

fn check_weight(w: f64, line: usize) -> Result<(), ErrorKind> {
    if w.is_finite() && w >= 0.0 {
        Ok(())
    } else {
        Err(ErrorKind::OutOfRange {
            line,
            reason: format!("attention weight {w} must be finite and non-negative"),
        })
    }
}

fn check_span(start: usize, end: usize, line: usize) -> Result<(), ErrorKind> {
    if start < end {
        Ok(())
    } else {
        Err(ErrorKind::OutOfRange {
            line,
            reason: format!("empty subtoken span [{start}, {end})"),
        })
    }
}

fn parse_entries(granularity: &str, value: Value, line: usize) -> Result<AttentionEntries, ErrorKind> {
    let json_err = |source| ErrorKind::Json { line, source };
    match granularity {
        "word" => {
            let entries: Vec<WordWeight> = serde_json::from_value(value).map_err(json_err)?;
            let mut ids = BTreeSet::new();
            for e in &entries {
                check_weight(e.weight, line)?;
                if !ids.insert(e.token_id) {
                    return Err(malformed(line, format!("token_id {} listed twice", e.token_id)));
                }
            }
            Ok(AttentionEntries::Word(entries))
        }
        "subtoken" => {
            let entries: Vec<SpanWeight> = serde_json::from_value(value).map_err(json_err)?;
            for e in &entries {
                check_weight(e.weight, line)?;
                check_span(e.char_start, e.char_end, line)?;
            }
            Ok(AttentionEntries::Subtoken(entries))
        }
        "matrix" => {
            let rows: Vec<MatrixRow> = serde_json::from_value(value).map_err(json_err)?;
            let n = rows.len();
            for (i, r) in rows.iter().enumerate() {
                if r.row.len() != n {
                    return Err(malformed(
                        line,
                        format!(
                            "attention matrix is not square: row {i} has {} columns, expected {n}",
                            r.row.len()
                        ),
                    ));
                }
                check_span(r.char_start, r.char_end, line)?;
                for &w in &r.row {
                    check_weight(w, line)?;
                }
            }
            Ok(AttentionEntries::Matrix(rows))
        }
        other => Err(malformed(
            line,
            format!("unknown granularity `{other}` (expected word, subtoken or matrix)"),
        )),
    }
}

pub fn write_model_attention(files: &[ModelAttentionFile]) -> String {
    let mut out = String::new();
    for f in files {
        let line = match &f.entries {
            AttentionEntries::Word(e) => serde_json::to_string(&OutLine {
                model_id: &f.model_id,
                family: f.family,
                doc_id: &f.doc_id,
                granularity: "word",
                entries: e,
            }),
            AttentionEntries::Subtoken(e) => serde_json::to_string(&OutLine {
                model_id: &f.model_id,
                family: f.family,
                doc_id: &f.doc_id,
                granularity: "subtoken",
                entries: e,
            }),
            AttentionEntries::Matrix(e) => serde_json::to_string(&OutLine {
                model_id: &f.model_id,
                family: f.family,
                doc_id: &f.doc_id,
                granularity: "matrix",
                entries: e,
            }),
        }
        .expect("attention entries always serialize");
        out.push_str(&line);
        out.push('\n');
    }
    out
}
