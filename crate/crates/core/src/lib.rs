//! Compare where people look while reading with where neural reading
//! comprehension models put their attention.
//!
//! The crate turns eye-tracking fixations and exported model attention into
//! per-document probability distributions over words, then relates them
//! with KL divergence, rank correlation against model correctness and
//! Tukey-adjusted pairwise contrasts between model families.

pub mod attention;
pub mod gaze;
pub mod ingest;
pub mod model;
pub mod report;
pub mod stats;
pub mod synth;

pub use model::{
    AnswerSelection, AttentionDistribution, AttentionEntries, BBox, CorefAnnotation, Family, FixationEvent, GazeRecord,
    ModelAttentionFile, OutcomeRecord, Source, StimulusDocument, TokenBox,
};
