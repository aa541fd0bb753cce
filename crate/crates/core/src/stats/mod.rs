//! Comparison statistics over attention distributions.

mod agreement;
mod kl;
pub mod quadrature;
mod saliency;
mod spearman;
pub mod studentized_range;
mod tukey;

use std::fmt;
use std::str::FromStr;

use crate::model::{AttentionDistribution, Source};

pub use agreement::{participant_accuracy, percent_agreement, AgreementError};
pub use kl::{kl_divergence, KlError, DEFAULT_EPSILON};
pub use saliency::{coref_saliency, SaliencyError, SaliencyFlag, SaliencyReport};
pub use spearman::{average_ranks, spearman, spearman_p_value, CorrelationResult, SpearmanError, SPEARMAN_METHOD};
pub use tukey::{
    group_means, tukey_pairwise, tukey_permutation, ContrastResult, PermutationContrast, TukeyError,
    DEFAULT_PERMUTATIONS, DEFAULT_SEED,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MeanError {
    Empty,
    Mismatch,
}

/// Per-token arithmetic mean of distributions over the same document.
pub fn mean_distribution(dists: &[AttentionDistribution], source: Source) -> Result<AttentionDistribution, MeanError> {
    let first = dists.first().ok_or(MeanError::Empty)?;
    if dists
        .iter()
        .any(|d| d.len() != first.len() || d.doc_id() != first.doc_id())
    {
        return Err(MeanError::Mismatch);
    }
    let n = dists.len() as f64;
    let mut acc = vec![0.0; first.len()];
    for d in dists {
        for (a, w) in acc.iter_mut().zip(d.weights()) {
            *a += w;
        }
    }
    for a in &mut acc {
        *a /= n;
    }
    AttentionDistribution::new(first.doc_id(), source, acc).map_err(|_| MeanError::Mismatch)
}

/// Logarithm base used when reporting divergences and entropies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum LogBase {
    #[default]
    E,
    Two,
}

impl LogBase {
    /// Converts a value computed in nats.
    pub fn from_nats(&self, nats: f64) -> f64 {
        match self {
            LogBase::E => nats,
            LogBase::Two => nats / std::f64::consts::LN_2,
        }
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            LogBase::E => "e",
            LogBase::Two => "2",
        }
    }
}

impl fmt::Display for LogBase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for LogBase {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "e" => Ok(LogBase::E),
            "2" => Ok(LogBase::Two),
            other => Err(format!("unknown log base `{other}` (expected e or 2)")),
        }
    }
}
