//! Turning exported model attention into word-level distributions.
//!
//! Matrix exports are reduced to one weight per subtoken (row maximum),
//! subtokens are aligned onto word tokens by character overlap, weights are
//! normalized per model and finally averaged per family.

use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::model::{
    AttentionDistribution, AttentionEntries, Family, MatrixRow, ModelAttentionFile, Source, SpanWeight,
    StimulusDocument,
};
use crate::stats::{mean_distribution, MeanError};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AttentionError {
    #[error("attention matrix is not square ({rows} rows, row {row} has {cols} columns)")]
    NonSquare { rows: usize, row: usize, cols: usize },
    #[error("attention matrix has a negative or non-finite entry at ({row}, {col})")]
    NegativeEntry { row: usize, col: usize },
    #[error("subtoken [{char_start}, {char_end}) overlaps no word")]
    NoOverlap { char_start: usize, char_end: usize },
    #[error("subtoken [{char_start}, {char_end}) lies outside the document text ({len} chars)")]
    OutOfBounds {
        char_start: usize,
        char_end: usize,
        len: usize,
    },
    #[error("word-level entry references unknown token {0}")]
    UnknownToken(usize),
    #[error("invalid weight {0}")]
    InvalidWeight(f64),
    #[error("all attention weights are zero")]
    AllZero,
    #[error("cannot average an empty list of distributions")]
    EmptyList,
    #[error("distributions differ in document or length")]
    LengthMismatch,
    #[error("attention file is for document `{file}` but the stimulus is `{doc}`")]
    DocMismatch { file: String, doc: String },
}

impl From<MeanError> for AttentionError {
    fn from(e: MeanError) -> Self {
        match e {
            MeanError::Empty => AttentionError::EmptyList,
            MeanError::Mismatch => AttentionError::LengthMismatch,
        }
    }
}

/// Per-subtoken weights of one model on one document.
#[derive(Debug, Clone, PartialEq)]
pub struct SubtokenWeights {
    pub doc_id: String,
    pub model_id: String,
    pub entries: Vec<SpanWeight>,
}

/// Which axis of an exported matrix holds a token's attention vector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Orientation {
    #[default]
    Rows,
    Columns,
}

/// Per-word aggregation of aligned subtoken weights.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum AlignMode {
    #[default]
    Sum,
    Max,
}

impl AlignMode {
    pub fn as_str(&self) -> &'static str {
        match self {
            AlignMode::Sum => "sum",
            AlignMode::Max => "max",
        }
    }
}

impl fmt::Display for AlignMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for AlignMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "sum" => Ok(AlignMode::Sum),
            "max" => Ok(AlignMode::Max),
            other => Err(format!("unknown alignment mode `{other}` (expected sum or max)")),
        }
    }
}

/// Weight of each subtoken = the maximum of its attention vector. Output is
/// not normalized.
pub fn reduce_attention_matrix(
    doc_id: &str,
    model_id: &str,
    rows: &[MatrixRow],
    orientation: Orientation,
) -> Result<SubtokenWeights, AttentionError> {
    let n = rows.len();
    for (i, r) in rows.iter().enumerate() {
        if r.row.len() != n {
            return Err(AttentionError::NonSquare {
                rows: n,
                row: i,
                cols: r.row.len(),
            });
        }
        if let Some(j) = r.row.iter().position(|v| !(v.is_finite() && *v >= 0.0)) {
            return Err(AttentionError::NegativeEntry { row: i, col: j });
        }
    }
    let weights: Vec<f64> = match orientation {
        Orientation::Rows => rows.iter().map(|r| r.row.iter().copied().fold(0.0, f64::max)).collect(),
        Orientation::Columns => (0..n)
            .map(|j| rows.iter().map(|r| r.row[j]).fold(0.0, f64::max))
            .collect(),
    };
    Ok(SubtokenWeights {
        doc_id: doc_id.to_string(),
        model_id: model_id.to_string(),
        entries: rows
            .iter()
            .zip(weights)
            .map(|(r, weight)| SpanWeight {
                char_start: r.char_start,
                char_end: r.char_end,
                weight,
            })
            .collect(),
    })
}

/// Assigns each subtoken to the word it overlaps most (ties to the lower
/// token id) and aggregates per word. Words without subtokens get 0.
pub fn align_subtokens(
    sub: &SubtokenWeights,
    doc: &StimulusDocument,
    mode: AlignMode,
) -> Result<Vec<f64>, AttentionError> {
    let tokens = doc.tokens();
    let text_len = doc.char_len();
    let mut words = vec![0.0; tokens.len()];
    for e in &sub.entries {
        if !(e.weight.is_finite() && e.weight >= 0.0) {
            return Err(AttentionError::InvalidWeight(e.weight));
        }
        if e.char_start >= e.char_end || e.char_end > text_len {
            return Err(AttentionError::OutOfBounds {
                char_start: e.char_start,
                char_end: e.char_end,
                len: text_len,
            });
        }
        // tokens are sorted by char_start with disjoint spans; skip those ending at or before the subtoken
        let first = tokens.partition_point(|t| t.char_end <= e.char_start);
        let mut best: Option<(usize, usize)> = None;
        for t in tokens[first..].iter().take_while(|t| t.char_start < e.char_end) {
            let overlap = t
                .char_end
                .min(e.char_end)
                .saturating_sub(t.char_start.max(e.char_start));
            if overlap > 0 && best.is_none_or(|(o, _)| overlap > o) {
                best = Some((overlap, t.token_id));
            }
        }
        let (_, id) = best.ok_or(AttentionError::NoOverlap {
            char_start: e.char_start,
            char_end: e.char_end,
        })?;
        match mode {
            AlignMode::Sum => words[id] += e.weight,
            AlignMode::Max => words[id] = words[id].max(e.weight),
        }
    }
    Ok(words)
}

/// Divides by the total weight.
pub fn normalize_weights(
    doc_id: &str,
    source: Source,
    weights: &[f64],
) -> Result<AttentionDistribution, AttentionError> {
    if let Some(w) = weights.iter().find(|w| !(w.is_finite() && **w >= 0.0)) {
        return Err(AttentionError::InvalidWeight(*w));
    }
    if !(weights.iter().sum::<f64>() > 0.0) {
        return Err(AttentionError::AllZero);
    }
    AttentionDistribution::from_masses(doc_id, source, weights).map_err(|_| AttentionError::AllZero)
}

/// Unweighted mean of already-normalized distributions of one family.
pub fn ensemble_average(
    dists: &[AttentionDistribution],
    family: Family,
) -> Result<AttentionDistribution, AttentionError> {
    Ok(mean_distribution(dists, Source::ModelFamilyAverage(family))?)
}

/// Shannon entropy in nats, with `0 ln 0 = 0`.
pub fn entropy(dist: &AttentionDistribution) -> f64 {
    let h: f64 = dist.weights().iter().filter(|&&p| p > 0.0).map(|&p| -p * p.ln()).sum();
    h.max(0.0)
}

/// Raw (unnormalized) word-level weights for one exported file.
pub fn word_level_weights(
    file: &ModelAttentionFile,
    doc: &StimulusDocument,
    align: AlignMode,
    orientation: Orientation,
) -> Result<Vec<f64>, AttentionError> {
    if file.doc_id != doc.doc_id() {
        return Err(AttentionError::DocMismatch {
            file: file.doc_id.clone(),
            doc: doc.doc_id().to_string(),
        });
    }
    match &file.entries {
        AttentionEntries::Word(entries) => {
            let mut words = vec![0.0; doc.len()];
            for e in entries {
                if e.token_id >= doc.len() {
                    return Err(AttentionError::UnknownToken(e.token_id));
                }
                words[e.token_id] += e.weight;
            }
            Ok(words)
        }
        AttentionEntries::Subtoken(entries) => {
            let sub = SubtokenWeights {
                doc_id: file.doc_id.clone(),
                model_id: file.model_id.clone(),
                entries: entries.clone(),
            };
            align_subtokens(&sub, doc, align)
        }
        AttentionEntries::Matrix(rows) => {
            let sub = reduce_attention_matrix(&file.doc_id, &file.model_id, rows, orientation)?;
            align_subtokens(&sub, doc, align)
        }
    }
}

/// Normalized word-level distribution for one model on one document.
pub fn model_distribution(
    file: &ModelAttentionFile,
    doc: &StimulusDocument,
    align: AlignMode,
    orientation: Orientation,
) -> Result<AttentionDistribution, AttentionError> {
    let words = word_level_weights(file, doc, align, orientation)?;
    normalize_weights(doc.doc_id(), Source::Model(file.model_id.clone()), &words)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{BBox, TokenBox};

    fn rows(m: &[&[f64]]) -> Vec<MatrixRow> {
        m.iter()
            .enumerate()
            .map(|(i, r)| MatrixRow {
                char_start: i,
                char_end: i + 1,
                row: r.to_vec(),
            })
            .collect()
    }

    fn doc(words: &[&str]) -> StimulusDocument {
        let mut start = 0;
        let tokens = words
            .iter()
            .enumerate()
            .map(|(i, w)| {
                let len = w.chars().count();
                let t = TokenBox {
                    token_id: i,
                    text: w.to_string(),
                    sentence_index: 0,
                    char_start: start,
                    char_end: start + len,
                    bbox: BBox::new(i as f64 * 100.0, 0.0, i as f64 * 100.0 + 90.0, 20.0),
                };
                start += len + 1;
                t
            })
            .collect();
        StimulusDocument::from_tokens("d", tokens).unwrap()
    }

    fn weights(s: &SubtokenWeights) -> Vec<f64> {
        s.entries.iter().map(|e| e.weight).collect()
    }

    #[test]
    fn row_max_reduction() {
        let r = reduce_attention_matrix("d", "m", &rows(&[&[0.1, 0.4], &[0.3, 0.2]]), Orientation::Rows).unwrap();
        assert_eq!(weights(&r), vec![0.4, 0.3]);
        let c = reduce_attention_matrix("d", "m", &rows(&[&[0.1, 0.4], &[0.3, 0.2]]), Orientation::Columns).unwrap();
        assert_eq!(weights(&c), vec![0.3, 0.4]);
        let one_hot = reduce_attention_matrix(
            "d",
            "m",
            &rows(&[&[0.0, 1.0, 0.0], &[1.0, 0.0, 0.0], &[0.0, 0.0, 1.0]]),
            Orientation::Rows,
        )
        .unwrap();
        assert_eq!(weights(&one_hot), vec![1.0, 1.0, 1.0]);
        let single = reduce_attention_matrix("d", "m", &rows(&[&[0.7]]), Orientation::Rows).unwrap();
        assert_eq!(weights(&single), vec![0.7]);
    }

    #[test]
    fn matrix_errors() {
        assert!(matches!(
            reduce_attention_matrix("d", "m", &rows(&[&[0.1], &[0.3, 0.2]]), Orientation::Rows),
            Err(AttentionError::NonSquare { row: 0, .. })
        ));
        assert_eq!(
            reduce_attention_matrix("d", "m", &rows(&[&[0.1, -0.4], &[0.3, 0.2]]), Orientation::Rows).unwrap_err(),
            AttentionError::NegativeEntry { row: 0, col: 1 }
        );
    }

    #[test]
    fn identity_alignment() {
        let d = doc(&["the", "boy", "runs"]);
        let sub = SubtokenWeights {
            doc_id: "d".into(),
            model_id: "m".into(),
            entries: d
                .tokens()
                .iter()
                .zip([0.2, 0.5, 0.3])
                .map(|(t, w)| SpanWeight {
                    char_start: t.char_start,
                    char_end: t.char_end,
                    weight: w,
                })
                .collect(),
        };
        assert_eq!(align_subtokens(&sub, &d, AlignMode::Sum).unwrap(), vec![0.2, 0.5, 0.3]);
        assert_eq!(align_subtokens(&sub, &d, AlignMode::Max).unwrap(), vec![0.2, 0.5, 0.3]);
    }

    #[test]
    fn split_word_sum_and_max() {
        let d = doc(&["kids", "playing"]);
        // "playing" spans chars 5..12; "play" 5..9, "##ing" 9..12
        let sub = SubtokenWeights {
            doc_id: "d".into(),
            model_id: "m".into(),
            entries: vec![
                SpanWeight {
                    char_start: 5,
                    char_end: 9,
                    weight: 0.2,
                },
                SpanWeight {
                    char_start: 9,
                    char_end: 12,
                    weight: 0.1,
                },
            ],
        };
        let sum = align_subtokens(&sub, &d, AlignMode::Sum).unwrap();
        assert_eq!(sum[0], 0.0);
        assert!((sum[1] - 0.3).abs() < 1e-15);
        assert_eq!(align_subtokens(&sub, &d, AlignMode::Max).unwrap(), vec![0.0, 0.2]);
    }

    #[test]
    fn straddling_subtoken_goes_to_larger_overlap_then_lower_id() {
        let d = doc(&["ab", "cd"]); // "ab cd"
        let straddle = |s, e| SubtokenWeights {
            doc_id: "d".into(),
            model_id: "m".into(),
            entries: vec![SpanWeight {
                char_start: s,
                char_end: e,
                weight: 1.0,
            }],
        };
        assert_eq!(
            align_subtokens(&straddle(1, 5), &d, AlignMode::Sum).unwrap(),
            vec![0.0, 1.0]
        );
        assert_eq!(
            align_subtokens(&straddle(1, 4), &d, AlignMode::Sum).unwrap(),
            vec![1.0, 0.0]
        );
        assert_eq!(
            align_subtokens(&straddle(2, 3), &d, AlignMode::Sum).unwrap_err(),
            AttentionError::NoOverlap {
                char_start: 2,
                char_end: 3
            }
        );
        assert!(matches!(
            align_subtokens(&straddle(4, 9), &d, AlignMode::Sum),
            Err(AttentionError::OutOfBounds { .. })
        ));
    }

    #[test]
    fn normalization_examples() {
        let n = normalize_weights("d", Source::Model("m".into()), &[0.4, 0.3]).unwrap();
        assert!((n.weights()[0] - 4.0 / 7.0).abs() < 1e-15);
        assert!((n.weights()[1] - 3.0 / 7.0).abs() < 1e-15);
        assert!((n.weights()[0] - 0.571429).abs() < 1e-6);
        let u = normalize_weights("d", Source::Model("m".into()), &[1.0; 4]).unwrap();
        assert_eq!(u.weights(), &[0.25; 4]);
        assert_eq!(
            normalize_weights("d", Source::Model("m".into()), &[0.0, 0.0]).unwrap_err(),
            AttentionError::AllZero
        );
    }

    #[test]
    fn ensemble_examples() {
        let d = |w: Vec<f64>| AttentionDistribution::new("d", Source::Model("m".into()), w).unwrap();
        let avg = ensemble_average(&[d(vec![1.0, 0.0, 0.0]), d(vec![0.0, 1.0, 0.0])], Family::Cnn).unwrap();
        assert_eq!(avg.weights(), &[0.5, 0.5, 0.0]);
        assert_eq!(avg.source(), &Source::ModelFamilyAverage(Family::Cnn));
        let base = d(vec![0.1, 0.2, 0.7]);
        let nine = vec![base.clone(); 9];
        let avg = ensemble_average(&nine, Family::Lstm).unwrap();
        for (a, b) in avg.weights().iter().zip(base.weights()) {
            assert!((a - b).abs() < 1e-15);
        }
        assert_eq!(
            ensemble_average(&[], Family::Lstm).unwrap_err(),
            AttentionError::EmptyList
        );
    }

    #[test]
    fn entropy_examples() {
        let d = |w: Vec<f64>| AttentionDistribution::new("d", Source::HumanAverage, w).unwrap();
        assert_eq!(entropy(&d(vec![0.0, 1.0, 0.0])), 0.0);
        assert!((entropy(&d(vec![0.25; 4])) - 4f64.ln()).abs() < 1e-15);
        assert!((entropy(&d(vec![0.25; 4])) - 1.386294).abs() < 1e-6);
        let e = entropy(&d(vec![0.5, 0.25, 0.25]));
        assert!((e - (0.5 * 2f64.ln() + 0.5 * 4f64.ln())).abs() < 1e-15);
        assert!((e - 1.039721).abs() < 1e-6);
    }

    #[test]
    fn word_level_file_checks_tokens() {
        let d = doc(&["a", "b"]);
        let file = ModelAttentionFile {
            model_id: "m".into(),
            family: Family::Cnn,
            doc_id: "d".into(),
            entries: AttentionEntries::Word(vec![crate::model::WordWeight {
                token_id: 5,
                weight: 1.0,
            }]),
        };
        assert_eq!(
            word_level_weights(&file, &d, AlignMode::Sum, Orientation::Rows).unwrap_err(),
            AttentionError::UnknownToken(5)
        );
    }
}
