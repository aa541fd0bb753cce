//! Shared domain types: stimulus documents, fixations, attention
//! distributions and the per-document annotations that ride along with them.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Tolerance on the total mass of an [`AttentionDistribution`].
pub const MASS_TOLERANCE: f64 = 1e-9;

/// Axis-aligned screen rectangle in pixels. Containment is half-open:
/// inclusive on `x0`/`y0`, exclusive on `x1`/`y1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BBox {
    pub x0: f64,
    pub y0: f64,
    pub x1: f64,
    pub y1: f64,
}

impl BBox {
    pub fn new(x0: f64, y0: f64, x1: f64, y1: f64) -> Self {
        Self { x0, y0, x1, y1 }
    }

    pub fn is_valid(&self) -> bool {
        [self.x0, self.y0, self.x1, self.y1].iter().all(|v| v.is_finite()) && self.x0 < self.x1 && self.y0 < self.y1
    }

    #[inline]
    pub fn contains(&self, x: f64, y: f64) -> bool {
        x >= self.x0 && x < self.x1 && y >= self.y0 && y < self.y1
    }

    /// Euclidean distance from `(x, y)` to the closed rectangle; 0 inside or on the boundary.
    #[inline]
    pub fn distance(&self, x: f64, y: f64) -> f64 {
        let dx = (self.x0 - x).max(x - self.x1).max(0.0);
        let dy = (self.y0 - y).max(y - self.y1).max(0.0);
        dx.hypot(dy)
    }

    /// True when the open interiors of the two boxes intersect.
    pub fn interior_intersects(&self, other: &BBox) -> bool {
        self.x0 < other.x1 && other.x0 < self.x1 && self.y0 < other.y1 && other.y0 < self.y1
    }

    pub fn width(&self) -> f64 {
        self.x1 - self.x0
    }

    pub fn height(&self) -> f64 {
        self.y1 - self.y0
    }
}

/// One word of a stimulus with its character span and on-screen box.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TokenBox {
    pub token_id: usize,
    pub text: String,
    pub sentence_index: usize,
    /// Character (not byte) offsets into the document's plain text, end exclusive.
    pub char_start: usize,
    pub char_end: usize,
    pub bbox: BBox,
}

/// A validated text stimulus. Construct through [`StimulusDocument::new`]
/// or the stimulus parser; both enforce every token invariant.
#[derive(Debug, Clone, PartialEq)]
pub struct StimulusDocument {
    doc_id: String,
    tokens: Vec<TokenBox>,
    plain_text: String,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DocumentError {
    #[error("token ids are not consecutive from 0 (found {found} at position {position})")]
    NonConsecutiveIds { position: usize, found: usize },
    #[error("duplicate token id {0}")]
    DuplicateTokenId(usize),
    #[error("token {0} has an invalid bounding box")]
    InvalidBox(usize),
    #[error("token {0} has an empty or inverted character span")]
    EmptySpan(usize),
    #[error("token {0}: character offsets do not slice to the token text")]
    OffsetMismatch(usize),
    #[error("token {0} starts before the preceding token")]
    OutOfOrder(usize),
    #[error("boxes of tokens {0} and {1} overlap")]
    OverlappingBoxes(usize, usize),
}

impl StimulusDocument {
    pub fn new(
        doc_id: impl Into<String>,
        tokens: Vec<TokenBox>,
        plain_text: impl Into<String>,
    ) -> Result<Self, DocumentError> {
        let doc = Self {
            doc_id: doc_id.into(),
            tokens,
            plain_text: plain_text.into(),
        };
        doc.validate()?;
        Ok(doc)
    }

    /// Builds a document whose plain text is reconstructed from the token
    /// spans, gaps filled with spaces.
    pub fn from_tokens(doc_id: impl Into<String>, tokens: Vec<TokenBox>) -> Result<Self, DocumentError> {
        let plain_text = reconstruct_text(&tokens)?;
        Self::new(doc_id, tokens, plain_text)
    }

    fn validate(&self) -> Result<(), DocumentError> {
        let chars: Vec<char> = self.plain_text.chars().collect();
        let mut prev_start = None;
        for (position, tok) in self.tokens.iter().enumerate() {
            if tok.token_id != position {
                if self.tokens[..position].iter().any(|t| t.token_id == tok.token_id) {
                    return Err(DocumentError::DuplicateTokenId(tok.token_id));
                }
                return Err(DocumentError::NonConsecutiveIds {
                    position,
                    found: tok.token_id,
                });
            }
            if !tok.bbox.is_valid() {
                return Err(DocumentError::InvalidBox(tok.token_id));
            }
            if tok.char_start >= tok.char_end {
                return Err(DocumentError::EmptySpan(tok.token_id));
            }
            if tok.char_end > chars.len() || !chars[tok.char_start..tok.char_end].iter().copied().eq(tok.text.chars()) {
                return Err(DocumentError::OffsetMismatch(tok.token_id));
            }
            if let Some(prev) = prev_start {
                if tok.char_start <= prev {
                    return Err(DocumentError::OutOfOrder(tok.token_id));
                }
            }
            prev_start = Some(tok.char_start);
        }
        if let Some((a, b)) = find_overlap(&self.tokens) {
            return Err(DocumentError::OverlappingBoxes(a, b));
        }
        Ok(())
    }

    pub fn doc_id(&self) -> &str {
        &self.doc_id
    }

    pub fn tokens(&self) -> &[TokenBox] {
        &self.tokens
    }

    pub fn plain_text(&self) -> &str {
        &self.plain_text
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    /// Number of characters in the plain text.
    pub fn char_len(&self) -> usize {
        self.plain_text.chars().count()
    }
}

fn reconstruct_text(tokens: &[TokenBox]) -> Result<String, DocumentError> {
    let end = tokens.iter().map(|t| t.char_end).max().unwrap_or(0);
    let mut chars: Vec<Option<char>> = vec![None; end];
    for tok in tokens {
        if tok.char_start >= tok.char_end {
            return Err(DocumentError::EmptySpan(tok.token_id));
        }
        if tok.text.chars().count() != tok.char_end - tok.char_start {
            return Err(DocumentError::OffsetMismatch(tok.token_id));
        }
        for (slot, c) in chars[tok.char_start..tok.char_end].iter_mut().zip(tok.text.chars()) {
            match slot {
                Some(existing) if *existing != c => return Err(DocumentError::OffsetMismatch(tok.token_id)),
                _ => *slot = Some(c),
            }
        }
    }
    Ok(chars.into_iter().map(|c| c.unwrap_or(' ')).collect())
}

/// Returns the first pair (by lower token id) of tokens whose box interiors intersect.
pub fn find_overlap(tokens: &[TokenBox]) -> Option<(usize, usize)> {
    let mut order: Vec<usize> = (0..tokens.len()).collect();
    order.sort_by(|&a, &b| tokens[a].bbox.x0.total_cmp(&tokens[b].bbox.x0));
    let mut hits: Vec<(usize, usize)> = Vec::new();
    for (i, &a) in order.iter().enumerate() {
        let ba = &tokens[a].bbox;
        for &b in &order[i + 1..] {
            let bb = &tokens[b].bbox;
            if bb.x0 >= ba.x1 {
                break;
            }
            if ba.interior_intersects(bb) {
                let (lo, hi) = (
                    tokens[a].token_id.min(tokens[b].token_id),
                    tokens[a].token_id.max(tokens[b].token_id),
                );
                hits.push((lo, hi));
            }
        }
    }
    hits.into_iter().min()
}

/// A single fixation as exported by the eye tracker.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FixationEvent {
    pub t_ms: f64,
    pub x: f64,
    pub y: f64,
    pub dur_ms: f64,
    /// Token assigned upstream, if the exporter already mapped the fixation.
    pub word_id: Option<usize>,
}

/// One participant's time-ordered fixations over one document.
#[derive(Debug, Clone, PartialEq)]
pub struct GazeRecord {
    pub participant_id: String,
    pub doc_id: String,
    pub fixations: Vec<FixationEvent>,
}

impl GazeRecord {
    pub fn total_duration(&self) -> f64 {
        self.fixations.iter().map(|f| f.dur_ms).sum()
    }
}

/// Model architecture family.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Family {
    #[serde(rename = "CNN")]
    Cnn,
    #[serde(rename = "LSTM")]
    Lstm,
    #[serde(rename = "XLNET")]
    Xlnet,
}

impl Family {
    pub const ALL: [Family; 3] = [Family::Cnn, Family::Lstm, Family::Xlnet];

    pub fn as_str(&self) -> &'static str {
        match self {
            Family::Cnn => "CNN",
            Family::Lstm => "LSTM",
            Family::Xlnet => "XLNET",
        }
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("unknown model family `{0}` (expected CNN, LSTM or XLNET)")]
pub struct UnknownFamily(pub String);

impl FromStr for Family {
    type Err = UnknownFamily;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_uppercase().as_str() {
            "CNN" => Ok(Family::Cnn),
            "LSTM" => Ok(Family::Lstm),
            "XLNET" => Ok(Family::Xlnet),
            _ => Err(UnknownFamily(s.to_string())),
        }
    }
}

/// Where an attention distribution came from.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Source {
    HumanAverage,
    HumanParticipant(String),
    Model(String),
    ModelFamilyAverage(Family),
}

impl fmt::Display for Source {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Source::HumanAverage => f.write_str("human-average"),
            Source::HumanParticipant(id) => write!(f, "human-participant({id})"),
            Source::Model(id) => write!(f, "model({id})"),
            Source::ModelFamilyAverage(fam) => write!(f, "model-family-average({fam})"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DistributionError {
    #[error("distribution is empty")]
    Empty,
    #[error("weight {index} is negative or not finite ({value})")]
    InvalidWeight { index: usize, value: f64 },
    #[error("weights sum to {0}, expected 1")]
    NotNormalized(f64),
}

/// A probability vector over a document's word tokens.
#[derive(Debug, Clone, PartialEq)]
pub struct AttentionDistribution {
    doc_id: String,
    source: Source,
    weights: Vec<f64>,
}

impl AttentionDistribution {
    pub fn new(doc_id: impl Into<String>, source: Source, weights: Vec<f64>) -> Result<Self, DistributionError> {
        if weights.is_empty() {
            return Err(DistributionError::Empty);
        }
        if let Some((index, &value)) = weights.iter().enumerate().find(|(_, w)| !(w.is_finite() && **w >= 0.0)) {
            return Err(DistributionError::InvalidWeight { index, value });
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > MASS_TOLERANCE {
            return Err(DistributionError::NotNormalized(total));
        }
        Ok(Self {
            doc_id: doc_id.into(),
            source,
            weights,
        })
    }

    /// Divides non-negative masses by their total. Fails on an all-zero vector.
    pub fn from_masses(doc_id: impl Into<String>, source: Source, masses: &[f64]) -> Result<Self, DistributionError> {
        if masses.is_empty() {
            return Err(DistributionError::Empty);
        }
        if let Some((index, &value)) = masses.iter().enumerate().find(|(_, w)| !(w.is_finite() && **w >= 0.0)) {
            return Err(DistributionError::InvalidWeight { index, value });
        }
        let total: f64 = masses.iter().sum();
        if !(total > 0.0) || !total.is_finite() {
            return Err(DistributionError::NotNormalized(total));
        }
        let weights = masses.iter().map(|m| m / total).collect();
        Self::new(doc_id, source, weights)
    }

    pub fn uniform(doc_id: impl Into<String>, source: Source, len: usize) -> Result<Self, DistributionError> {
        if len == 0 {
            return Err(DistributionError::Empty);
        }
        Self::new(doc_id, source, vec![1.0 / len as f64; len])
    }

    pub fn doc_id(&self) -> &str {
        &self.doc_id
    }

    pub fn source(&self) -> &Source {
        &self.source
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn with_source(mut self, source: Source) -> Self {
        self.source = source;
        self
    }

    pub fn into_weights(self) -> Vec<f64> {
        self.weights
    }
}

/// A word-level weight exported for one token.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WordWeight {
    pub token_id: usize,
    pub weight: f64,
}

/// A weight attached to a character span (a model subtoken).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpanWeight {
    pub char_start: usize,
    pub char_end: usize,
    pub weight: f64,
}

/// One row of a square self-attention matrix together with its subtoken span.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatrixRow {
    pub char_start: usize,
    pub char_end: usize,
    pub row: Vec<f64>,
}

/// Raw attention payload in one of the three supported granularities.
#[derive(Debug, Clone, PartialEq)]
pub enum AttentionEntries {
    Word(Vec<WordWeight>),
    Subtoken(Vec<SpanWeight>),
    Matrix(Vec<MatrixRow>),
}

impl AttentionEntries {
    pub fn granularity(&self) -> &'static str {
        match self {
            AttentionEntries::Word(_) => "word",
            AttentionEntries::Subtoken(_) => "subtoken",
            AttentionEntries::Matrix(_) => "matrix",
        }
    }
}

/// Attention exported by one model for one document.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelAttentionFile {
    pub model_id: String,
    pub family: Family,
    pub doc_id: String,
    pub entries: AttentionEntries,
}

/// How many members of a family's ensemble answered a document correctly.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OutcomeRecord {
    pub doc_id: String,
    pub family: Family,
    pub n_correct: u32,
    pub n_models: u32,
}

impl OutcomeRecord {
    /// Majority vote of the ensemble is correct.
    pub fn majority_correct(&self) -> bool {
        2 * self.n_correct > self.n_models
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MentionKind {
    Antecedent,
    Pronoun,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Mention {
    pub token_ids: Vec<usize>,
    pub kind: MentionKind,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorefChain {
    pub chain_id: String,
    pub mentions: Vec<Mention>,
}

/// Coreference chains annotated over one document.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorefAnnotation {
    pub doc_id: String,
    pub chains: Vec<CorefChain>,
}

/// Highest valid answer index (five candidates per question).
pub const MAX_ANSWER_INDEX: u8 = 4;

/// A participant's multiple-choice answer for one document.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AnswerSelection {
    pub participant_id: String,
    pub doc_id: String,
    pub selected: u8,
    pub correct: u8,
    /// Study/schema group the selection belongs to; empty when ungrouped.
    pub group: String,
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tok(id: usize, text: &str, start: usize, bbox: BBox) -> TokenBox {
        TokenBox {
            token_id: id,
            text: text.to_string(),
            sentence_index: 0,
            char_start: start,
            char_end: start + text.chars().count(),
            bbox,
        }
    }

    #[test]
    fn containment_is_half_open() {
        let b = BBox::new(100.0, 200.0, 160.0, 220.0);
        assert!(b.contains(100.0, 200.0));
        assert!(!b.contains(160.0, 210.0));
        assert!(!b.contains(130.0, 220.0));
        assert_eq!(b.distance(98.0, 210.0), 2.0);
        assert_eq!(b.distance(130.0, 210.0), 0.0);
    }

    #[test]
    fn text_reconstruction_fills_gaps() {
        let doc = StimulusDocument::from_tokens(
            "d",
            vec![
                tok(0, "Hello", 0, BBox::new(0.0, 0.0, 50.0, 20.0)),
                tok(1, "wörld", 6, BBox::new(60.0, 0.0, 110.0, 20.0)),
            ],
        )
        .unwrap();
        assert_eq!(doc.plain_text(), "Hello wörld");
        assert_eq!(doc.char_len(), 11);
    }

    #[test]
    fn rejects_touching_but_accepts_adjacent_boxes() {
        let adjacent = vec![
            tok(0, "a", 0, BBox::new(0.0, 0.0, 10.0, 10.0)),
            tok(1, "b", 2, BBox::new(10.0, 0.0, 20.0, 10.0)),
        ];
        assert!(StimulusDocument::from_tokens("d", adjacent).is_ok());
        let overlapping = vec![
            tok(0, "a", 0, BBox::new(0.0, 0.0, 10.0, 10.0)),
            tok(1, "b", 2, BBox::new(9.0, 5.0, 20.0, 15.0)),
        ];
        assert_eq!(
            StimulusDocument::from_tokens("d", overlapping).unwrap_err(),
            DocumentError::OverlappingBoxes(0, 1)
        );
    }

    #[test]
    fn distribution_validation() {
        assert!(AttentionDistribution::new("d", Source::HumanAverage, vec![0.5, 0.5]).is_ok());
        assert!(matches!(
            AttentionDistribution::new("d", Source::HumanAverage, vec![0.5, 0.6]),
            Err(DistributionError::NotNormalized(_))
        ));
        assert!(matches!(
            AttentionDistribution::new("d", Source::HumanAverage, vec![1.5, -0.5]),
            Err(DistributionError::InvalidWeight { index: 1, .. })
        ));
        assert_eq!(
            AttentionDistribution::from_masses("d", Source::HumanAverage, &[2.0, 1.0, 1.0])
                .unwrap()
                .weights(),
            &[0.5, 0.25, 0.25]
        );
    }

    #[test]
    fn family_parsing_is_case_insensitive() {
        assert_eq!("XLNet".parse::<Family>().unwrap(), Family::Xlnet);
        assert_eq!("lstm".parse::<Family>().unwrap(), Family::Lstm);
        assert!("GRU".parse::<Family>().is_err());
    }
}
