use std::collections::BTreeMap;
use std::path::Path;

use super::format::format_float;
use super::pipeline::DocAnalysis;
use super::{ReportError, SortKey};
use crate::model::{Family, OutcomeRecord};

/// One line of `compare.csv`.
#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonRow {
    pub doc_id: String,
    pub kl: BTreeMap<Family, f64>,
    pub n_correct: BTreeMap<Family, u32>,
    pub n_models: BTreeMap<Family, u32>,
}

impl ComparisonRow {
    fn sum_kl(&self) -> f64 {
        self.kl.values().sum()
    }
}

pub fn comparison_rows(
    analyses: &[DocAnalysis],
    outcomes: &BTreeMap<&str, BTreeMap<Family, &OutcomeRecord>>,
) -> Result<Vec<ComparisonRow>, ReportError> {
    analyses
        .iter()
        .map(|a| {
            let o = outcomes.get(a.doc_id.as_str());
            let mut row = ComparisonRow {
                doc_id: a.doc_id.clone(),
                kl: a.kl.clone(),
                n_correct: BTreeMap::new(),
                n_models: BTreeMap::new(),
            };
            for f in a.kl.keys() {
                let rec = o.and_then(|m| m.get(f)).ok_or_else(|| ReportError::MissingDocument {
                    input: format!("outcomes ({f})"),
                    doc_id: a.doc_id.clone(),
                })?;
                row.n_correct.insert(*f, rec.n_correct);
                row.n_models.insert(*f, rec.n_models);
            }
            Ok(row)
        })
        .collect()
}

/// Ascending by the chosen key, ties by doc_id.
pub fn sort_rows(rows: &mut [ComparisonRow], key: &SortKey) -> Result<(), ReportError> {
    let value = |r: &ComparisonRow| -> f64 {
        match key {
            SortKey::Family(f) => r.kl[f],
            SortKey::SumKl => r.sum_kl(),
        }
    };
    if let (SortKey::Family(f), Some(first)) = (key, rows.first()) {
        if !first.kl.contains_key(f) {
            return Err(ReportError::Inconsistent(format!(
                "--sort-family {f} has no attention input"
            )));
        }
    }
    rows.sort_by(|a, b| value(a).total_cmp(&value(b)).then_with(|| a.doc_id.cmp(&b.doc_id)));
    Ok(())
}

pub fn write_compare_csv(rows: &[ComparisonRow]) -> String {
    let families: Vec<Family> = rows.first().map(|r| r.kl.keys().copied().collect()).unwrap_or_default();
    let mut header = vec!["doc_id".to_string()];
    header.extend(families.iter().map(|f| format!("kl_{f}")));
    header.extend(families.iter().map(|f| format!("n_correct_{f}")));
    header.extend(families.iter().map(|f| format!("n_models_{f}")));
    let mut out = header.join(",");
    out.push('\n');
    for r in rows {
        let mut fields = vec![r.doc_id.clone()];
        fields.extend(families.iter().map(|f| format_float(r.kl[f])));
        fields.extend(families.iter().map(|f| r.n_correct[f].to_string()));
        fields.extend(families.iter().map(|f| r.n_models[f].to_string()));
        out.push_str(&csv_line(&fields));
    }
    out
}

/// Joins fields, quoting any that need it.
pub(crate) fn csv_line<S: AsRef<str>>(fields: &[S]) -> String {
    let mut out = String::new();
    for (i, f) in fields.iter().enumerate() {
        if i > 0 {
            out.push(',');
        }
        let f = f.as_ref();
        if f.contains([',', '"', '\n', '\r']) {
            out.push('"');
            out.push_str(&f.replace('"', "\"\""));
            out.push('"');
        } else {
            out.push_str(f);
        }
    }
    out.push('\n');
    out
}

/// Reads a `compare.csv` written by [`write_compare_csv`].
pub fn read_compare_csv(path: &Path) -> Result<Vec<ComparisonRow>, ReportError> {
    let table_err = |line: usize, reason: String| ReportError::Table {
        path: path.to_path_buf(),
        line,
        reason,
    };
    let mut reader = csv::Reader::from_path(path).map_err(|e| table_err(0, e.to_string()))?;
    let header = reader.headers().map_err(|e| table_err(1, e.to_string()))?.clone();
    if header.get(0) != Some("doc_id") {
        return Err(table_err(1, "first column must be doc_id".into()));
    }
    let mut families = Vec::new();
    for name in header.iter().skip(1) {
        if let Some(f) = name.strip_prefix("kl_") {
            families.push(f.parse::<Family>().map_err(|e| table_err(1, e.to_string()))?);
        }
    }
    if families.is_empty() {
        return Err(table_err(1, "no kl_<family> columns".into()));
    }
    let column = |name: String| {
        header
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| table_err(1, format!("missing column `{name}`")))
    };
    let mut cols = Vec::new();
    for f in &families {
        cols.push((
            *f,
            column(format!("kl_{f}"))?,
            column(format!("n_correct_{f}"))?,
            column(format!("n_models_{f}"))?,
        ));
    }
    let mut rows = Vec::new();
    for (i, rec) in reader.records().enumerate() {
        let line = i + 2;
        let rec = rec.map_err(|e| table_err(line, e.to_string()))?;
        let field = |idx: usize| {
            rec.get(idx)
                .ok_or_else(|| table_err(line, format!("missing field {}", idx + 1)))
        };
        let mut row = ComparisonRow {
            doc_id: field(0)?.to_string(),
            kl: BTreeMap::new(),
            n_correct: BTreeMap::new(),
            n_models: BTreeMap::new(),
        };
        for &(f, kl, nc, nm) in &cols {
            let parse_err = |what: &str, v: &str| table_err(line, format!("invalid {what} `{v}`"));
            let v = field(kl)?;
            row.kl.insert(f, v.parse().map_err(|_| parse_err("KL", v))?);
            let v = field(nc)?;
            row.n_correct
                .insert(f, v.parse().map_err(|_| parse_err("n_correct", v))?);
            let v = field(nm)?;
            row.n_models.insert(f, v.parse().map_err(|_| parse_err("n_models", v))?);
        }
        rows.push(row);
    }
    Ok(rows)
}
