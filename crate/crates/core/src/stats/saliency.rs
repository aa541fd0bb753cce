use thiserror::Error;

use crate::model::{AttentionDistribution, CorefAnnotation, MentionKind};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SaliencyError {
    #[error("coreference annotation is for `{coref}` but the distribution is for `{dist}`")]
    DocMismatch { coref: String, dist: String },
    #[error("chain `{chain}` references unknown token {token_id}")]
    UnknownToken { chain: String, token_id: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SaliencyFlag {
    NoAntecedents,
    NoPronouns,
}

impl SaliencyFlag {
    pub fn as_str(&self) -> &'static str {
        match self {
            SaliencyFlag::NoAntecedents => "no-antecedents",
            SaliencyFlag::NoPronouns => "no-pronouns",
        }
    }
}

/// Mean attention per antecedent mention versus per pronoun mention.
#[derive(Debug, Clone, PartialEq)]
pub struct SaliencyReport {
    pub doc_id: String,
    pub antecedent_mean: Option<f64>,
    pub pronoun_mean: Option<f64>,
    pub antecedent_more_salient: bool,
}

impl SaliencyReport {
    pub fn flags(&self) -> Vec<SaliencyFlag> {
        let mut flags = Vec::new();
        if self.antecedent_mean.is_none() {
            flags.push(SaliencyFlag::NoAntecedents);
        }
        if self.pronoun_mean.is_none() {
            flags.push(SaliencyFlag::NoPronouns);
        }
        flags
    }
}

/// Each mention scores the mean weight of its tokens; mentions are then
/// averaged per kind across all chains of the document. A missing kind is
/// reported as an absent mean and the comparison is false.
pub fn coref_saliency(dist: &AttentionDistribution, coref: &CorefAnnotation) -> Result<SaliencyReport, SaliencyError> {
    if dist.doc_id() != coref.doc_id {
        return Err(SaliencyError::DocMismatch {
            coref: coref.doc_id.clone(),
            dist: dist.doc_id().to_string(),
        });
    }
    let w = dist.weights();
    let (mut ante, mut pron) = (Vec::new(), Vec::new());
    for chain in &coref.chains {
        for mention in &chain.mentions {
            let mut sum = 0.0;
            for &t in &mention.token_ids {
                sum += *w.get(t).ok_or_else(|| SaliencyError::UnknownToken {
                    chain: chain.chain_id.clone(),
                    token_id: t,
                })?;
            }
            if mention.token_ids.is_empty() {
                continue;
            }
            let score = sum / mention.token_ids.len() as f64;
            match mention.kind {
                MentionKind::Antecedent => ante.push(score),
                MentionKind::Pronoun => pron.push(score),
            }
        }
    }
    let avg = |v: &[f64]| (!v.is_empty()).then(|| v.iter().sum::<f64>() / v.len() as f64);
    let antecedent_mean = avg(&ante);
    let pronoun_mean = avg(&pron);
    let antecedent_more_salient = matches!((antecedent_mean, pronoun_mean), (Some(a), Some(p)) if a > p);
    Ok(SaliencyReport {
        doc_id: coref.doc_id.clone(),
        antecedent_mean,
        pronoun_mean,
        antecedent_more_salient,
    })
}
