use std::collections::BTreeMap;

use thiserror::Error;

use crate::model::{AnswerSelection, MAX_ANSWER_INDEX};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AgreementError {
    #[error("no answer selections")]
    EmptyInput,
    #[error("document `{doc_id}` has {n} participant(s), need at least 2")]
    TooFewParticipants { doc_id: String, n: usize },
}

/// Mean over documents of the fraction of participants who picked the
/// document's modal answer (modal ties go to the lower answer index).
pub fn percent_agreement(selections: &[AnswerSelection]) -> Result<f64, AgreementError> {
    if selections.is_empty() {
        return Err(AgreementError::EmptyInput);
    }
    let mut by_doc: BTreeMap<&str, [usize; MAX_ANSWER_INDEX as usize + 1]> = BTreeMap::new();
    for s in selections {
        by_doc.entry(s.doc_id.as_str()).or_default()[s.selected as usize] += 1;
    }
    let mut total = 0.0;
    for (doc_id, counts) in &by_doc {
        let n: usize = counts.iter().sum();
        if n < 2 {
            return Err(AgreementError::TooFewParticipants {
                doc_id: doc_id.to_string(),
                n,
            });
        }
        // the modal tie-break only picks which answer; the fraction is the same
        let modal = counts.iter().max().copied().unwrap_or(0);
        total += modal as f64 / n as f64;
    }
    Ok(total / by_doc.len() as f64)
}

/// Fraction of selections that match the correct answer.
pub fn participant_accuracy(selections: &[AnswerSelection]) -> Result<f64, AgreementError> {
    if selections.is_empty() {
        return Err(AgreementError::EmptyInput);
    }
    let correct = selections.iter().filter(|s| s.selected == s.correct).count();
    Ok(correct as f64 / selections.len() as f64)
}
