use thiserror::Error;

use crate::model::AttentionDistribution;

/// Additive smoothing mass applied to every token of both distributions.
pub const DEFAULT_EPSILON: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum KlError {
    #[error("distributions differ in document or length")]
    LengthMismatch,
    #[error("token {0} has human mass but zero model mass; use a positive epsilon")]
    InfiniteDivergence(usize),
    #[error("epsilon must be finite and non-negative, got {0}")]
    InvalidEpsilon(f64),
}

/// `D(h || m)` in nats after adding `epsilon` to every token of both
/// distributions and renormalizing.
///
/// Summed in the generalized form `h ln(h/m) - h + m`, whose terms are each
/// non-negative and whose extra terms cancel for normalized inputs.
pub fn kl_divergence(h: &AttentionDistribution, m: &AttentionDistribution, epsilon: f64) -> Result<f64, KlError> {
    if h.len() != m.len() || h.doc_id() != m.doc_id() {
        return Err(KlError::LengthMismatch);
    }
    kl_weights(h.weights(), m.weights(), epsilon)
}

pub(crate) fn kl_weights(h: &[f64], m: &[f64], epsilon: f64) -> Result<f64, KlError> {
    if h.len() != m.len() {
        return Err(KlError::LengthMismatch);
    }
    if !(epsilon.is_finite() && epsilon >= 0.0) {
        return Err(KlError::InvalidEpsilon(epsilon));
    }
    let norm = 1.0 + epsilon * h.len() as f64;
    let mut total = 0.0;
    for (i, (&hp, &mp)) in h.iter().zip(m).enumerate() {
        let hs = (hp + epsilon) / norm;
        let ms = (mp + epsilon) / norm;
        let term = if hs == 0.0 {
            ms
        } else if ms == 0.0 {
            return Err(KlError::InfiniteDivergence(i));
        } else {
            let d = (hs - ms) / ms;
            (ms * ((1.0 + d) * d.ln_1p() - d)).max(0.0)
        };
        total += term;
    }
    Ok(total)
}
