//! Fixation-to-word mapping and human attention distributions.

use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::model::{AttentionDistribution, FixationEvent, GazeRecord, Source, StimulusDocument, TokenBox};
use crate::stats::mean_distribution;

/// How a mapped fixation contributes to its token.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Weighting {
    /// Each fixation adds 1.
    Count,
    /// Each fixation adds its duration in milliseconds.
    #[default]
    Duration,
}

impl Weighting {
    pub fn as_str(&self) -> &'static str {
        match self {
            Weighting::Count => "count",
            Weighting::Duration => "duration",
        }
    }

    pub fn mass(&self, fix: &FixationEvent) -> f64 {
        match self {
            Weighting::Count => 1.0,
            Weighting::Duration => fix.dur_ms,
        }
    }
}

impl fmt::Display for Weighting {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Weighting {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "count" => Ok(Weighting::Count),
            "duration" => Ok(Weighting::Duration),
            other => Err(format!("unknown weighting `{other}` (expected count or duration)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GazeError {
    #[error("gaze record is for document `{record}` but the stimulus is `{doc}`")]
    DocMismatch { record: String, doc: String },
    #[error("fixation at index {index} references unknown token {word_id}")]
    UnknownWordId { index: usize, word_id: usize },
    #[error("no fixation mass landed on any token")]
    EmptyGaze,
    #[error("cannot average an empty list of distributions")]
    EmptyList,
    #[error("distributions differ in document or length")]
    LengthMismatch,
}

/// Uniform-grid bucket index over a document's token boxes.
///
/// Each cell lists the tokens whose box touches it, so containment tests
/// only look at a handful of candidates.
#[derive(Debug, Clone)]
pub struct HitIndex<'a> {
    tokens: &'a [TokenBox],
    min_x: f64,
    min_y: f64,
    max_x: f64,
    max_y: f64,
    cell_w: f64,
    cell_h: f64,
    nx: usize,
    ny: usize,
    cells: Vec<Vec<u32>>,
}

const MAX_CELLS_PER_TOKEN: usize = 4;

impl<'a> HitIndex<'a> {
    pub fn new(tokens: &'a [TokenBox]) -> Self {
        let mut index = Self {
            tokens,
            min_x: 0.0,
            min_y: 0.0,
            max_x: 0.0,
            max_y: 0.0,
            cell_w: 1.0,
            cell_h: 1.0,
            nx: 0,
            ny: 0,
            cells: Vec::new(),
        };
        if tokens.is_empty() {
            return index;
        }
        index.min_x = tokens.iter().map(|t| t.bbox.x0).fold(f64::INFINITY, f64::min);
        index.min_y = tokens.iter().map(|t| t.bbox.y0).fold(f64::INFINITY, f64::min);
        index.max_x = tokens.iter().map(|t| t.bbox.x1).fold(f64::NEG_INFINITY, f64::max);
        index.max_y = tokens.iter().map(|t| t.bbox.y1).fold(f64::NEG_INFINITY, f64::max);

        let mut widths: Vec<f64> = tokens.iter().map(|t| t.bbox.width()).collect();
        let mut heights: Vec<f64> = tokens.iter().map(|t| t.bbox.height()).collect();
        widths.sort_by(f64::total_cmp);
        heights.sort_by(f64::total_cmp);
        let span_x = index.max_x - index.min_x;
        let span_y = index.max_y - index.min_y;
        let mut cell_w = widths[widths.len() / 2];
        let mut cell_h = heights[heights.len() / 2];
        // keep the grid within a small multiple of the token count
        let budget = (MAX_CELLS_PER_TOKEN * tokens.len()).max(1) as f64;
        let cells = (span_x / cell_w).ceil().max(1.0) * (span_y / cell_h).ceil().max(1.0);
        if cells > budget {
            let scale = (cells / budget).sqrt();
            cell_w *= scale;
            cell_h *= scale;
        }
        index.cell_w = cell_w;
        index.cell_h = cell_h;
        index.nx = ((span_x / cell_w).floor() as usize + 1).max(1);
        index.ny = ((span_y / cell_h).floor() as usize + 1).max(1);
        index.cells = vec![Vec::new(); index.nx * index.ny];
        for (i, t) in tokens.iter().enumerate() {
            let (cx0, cy0) = index.cell_of(t.bbox.x0, t.bbox.y0);
            let (cx1, cy1) = index.cell_of(t.bbox.x1, t.bbox.y1);
            for cy in cy0..=cy1 {
                for cx in cx0..=cx1 {
                    index.cells[cy * index.nx + cx].push(i as u32);
                }
            }
        }
        index
    }

    fn cell_of(&self, x: f64, y: f64) -> (usize, usize) {
        let cx = ((x - self.min_x) / self.cell_w)
            .floor()
            .clamp(0.0, (self.nx - 1) as f64) as usize;
        let cy = ((y - self.min_y) / self.cell_h)
            .floor()
            .clamp(0.0, (self.ny - 1) as f64) as usize;
        (cx, cy)
    }

    /// Token whose box contains the point, if any.
    pub fn containing(&self, x: f64, y: f64) -> Option<usize> {
        if self.tokens.is_empty() || !(x >= self.min_x && x < self.max_x && y >= self.min_y && y < self.max_y) {
            return None;
        }
        let (cx, cy) = self.cell_of(x, y);
        self.cells[cy * self.nx + cx]
            .iter()
            .map(|&i| &self.tokens[i as usize])
            .filter(|t| t.bbox.contains(x, y))
            .map(|t| t.token_id)
            .min()
    }

    /// Resolves a point to a token: containment first, then the nearest box
    /// within `snap_tolerance_px` (ties to the lower token id).
    pub fn hit(&self, x: f64, y: f64, snap_tolerance_px: f64) -> Option<usize> {
        if !(x.is_finite() && y.is_finite()) {
            return None;
        }
        if let Some(id) = self.containing(x, y) {
            return Some(id);
        }
        if !(snap_tolerance_px > 0.0) || self.tokens.is_empty() {
            return None;
        }
        let snap = snap_tolerance_px;
        if x < self.min_x - snap || x > self.max_x + snap || y < self.min_y - snap || y > self.max_y + snap {
            return None;
        }
        let (cx0, cy0) = self.cell_of(x - snap, y - snap);
        let (cx1, cy1) = self.cell_of(x + snap, y + snap);
        let mut best: Option<(f64, usize)> = None;
        let mut consider = |t: &TokenBox| {
            let d = t.bbox.distance(x, y);
            if d <= snap {
                let cand = (d, t.token_id);
                if best.is_none_or(|b| cand.0 < b.0 || (cand.0 == b.0 && cand.1 < b.1)) {
                    best = Some(cand);
                }
            }
        };
        if (cx1 - cx0 + 1) * (cy1 - cy0 + 1) >= self.cells.len() {
            self.tokens.iter().for_each(&mut consider);
        } else {
            for cy in cy0..=cy1 {
                for cx in cx0..=cx1 {
                    for &i in &self.cells[cy * self.nx + cx] {
                        consider(&self.tokens[i as usize]);
                    }
                }
            }
        }
        best.map(|(_, id)| id)
    }
}

/// One-off hit test. Prefer [`HitIndex`] when resolving many fixations
/// against the same document.
pub fn hit_test(fixation: &FixationEvent, tokens: &[TokenBox], snap_tolerance_px: f64) -> Option<usize> {
    HitIndex::new(tokens).hit(fixation.x, fixation.y, snap_tolerance_px)
}

/// Resolves every fixation of a record to a token id. A pre-assigned
/// `word_id` wins over geometry.
pub fn resolve_fixations(
    record: &GazeRecord,
    doc: &StimulusDocument,
    snap_tolerance_px: f64,
) -> Result<Vec<Option<usize>>, GazeError> {
    if record.doc_id != doc.doc_id() {
        return Err(GazeError::DocMismatch {
            record: record.doc_id.clone(),
            doc: doc.doc_id().to_string(),
        });
    }
    let index = HitIndex::new(doc.tokens());
    record
        .fixations
        .iter()
        .enumerate()
        .map(|(i, f)| match f.word_id {
            Some(w) if w < doc.len() => Ok(Some(w)),
            Some(w) => Err(GazeError::UnknownWordId { index: i, word_id: w }),
            None => Ok(index.hit(f.x, f.y, snap_tolerance_px)),
        })
        .collect()
}

/// Per-token fixation mass for one participant on one document.
#[derive(Debug, Clone, PartialEq)]
pub struct GazeCountVector {
    pub doc_id: String,
    pub participant_id: String,
    pub counts: Vec<f64>,
    /// Number of fixations that resolved to no token.
    pub unmapped_count: usize,
    /// Weighting-appropriate mass carried by those fixations.
    pub unmapped_mass: f64,
}

impl GazeCountVector {
    pub fn mapped_mass(&self) -> f64 {
        self.counts.iter().sum()
    }
}

pub fn accumulate_counts(
    record: &GazeRecord,
    doc: &StimulusDocument,
    weighting: Weighting,
    snap_tolerance_px: f64,
) -> Result<GazeCountVector, GazeError> {
    let resolved = resolve_fixations(record, doc, snap_tolerance_px)?;
    Ok(counts_from_resolved(record, doc.len(), &resolved, weighting))
}

pub(crate) fn counts_from_resolved(
    record: &GazeRecord,
    n_tokens: usize,
    resolved: &[Option<usize>],
    weighting: Weighting,
) -> GazeCountVector {
    let mut counts = vec![0.0; n_tokens];
    let mut unmapped_count = 0;
    let mut unmapped_mass = 0.0;
    for (fix, tok) in record.fixations.iter().zip(resolved) {
        let mass = weighting.mass(fix);
        match tok {
            Some(t) => counts[*t] += mass,
            None => {
                unmapped_count += 1;
                unmapped_mass += mass;
            }
        }
    }
    GazeCountVector {
        doc_id: record.doc_id.clone(),
        participant_id: record.participant_id.clone(),
        counts,
        unmapped_count,
        unmapped_mass,
    }
}

/// Normalizes fixation mass into a participant's attention distribution.
pub fn to_distribution(counts: &GazeCountVector) -> Result<AttentionDistribution, GazeError> {
    if !(counts.mapped_mass() > 0.0) {
        return Err(GazeError::EmptyGaze);
    }
    AttentionDistribution::from_masses(
        counts.doc_id.clone(),
        Source::HumanParticipant(counts.participant_id.clone()),
        &counts.counts,
    )
    .map_err(|_| GazeError::EmptyGaze)
}

/// Unweighted per-token mean over participants of one document.
pub fn average_participants(dists: &[AttentionDistribution]) -> Result<AttentionDistribution, GazeError> {
    mean_distribution(dists, Source::HumanAverage).map_err(|e| match e {
        crate::stats::MeanError::Empty => GazeError::EmptyList,
        crate::stats::MeanError::Mismatch => GazeError::LengthMismatch,
    })
}
