use std::collections::HashSet;
use std::path::Path;

use super::{at_path, malformed, read_file, ErrorKind, IngestError};
use crate::model::{CorefAnnotation, MentionKind};

pub fn parse_coref(path: &Path) -> Result<Vec<CorefAnnotation>, IngestError> {
    let content = read_file(path)?;
    at_path(path, parse_coref_str(&content))
}

/// Accepts either a single JSON array of annotations or one annotation
/// object per line.
pub fn parse_coref_str(content: &str) -> Result<Vec<CorefAnnotation>, ErrorKind> {
    let trimmed = content.trim_start();
    let annotations: Vec<(usize, CorefAnnotation)> = if trimmed.starts_with('[') {
        let skipped = content.len() - trimmed.len();
        let first_line = content[..skipped].matches('\n').count() + 1;
        let all: Vec<CorefAnnotation> = serde_json::from_str(content).map_err(|source| ErrorKind::Json {
            line: first_line + source.line().saturating_sub(1),
            source,
        })?;
        all.into_iter().map(|a| (first_line, a)).collect()
    } else {
        let mut v = Vec::new();
        for (idx, raw) in content.lines().enumerate() {
            if raw.trim().is_empty() {
                continue;
            }
            let line = idx + 1;
            let ann = serde_json::from_str(raw).map_err(|source| ErrorKind::Json { line, source })?;
            v.push((line, ann));
        }
        v
    };

    let mut docs = HashSet::new();
    for (line, ann) in &annotations {
        if !docs.insert(ann.doc_id.clone()) {
            return Err(ErrorKind::DuplicateRecord {
                line: *line,
                key: ann.doc_id.clone(),
            });
        }
        for chain in &ann.chains {
            if !chain.mentions.iter().any(|m| m.kind == MentionKind::Antecedent) {
                return Err(malformed(
                    *line,
                    format!("chain `{}` has no antecedent mention", chain.chain_id),
                ));
            }
            if chain.mentions.iter().any(|m| m.token_ids.is_empty()) {
                return Err(malformed(
                    *line,
                    format!("chain `{}` has a mention without tokens", chain.chain_id),
                ));
            }
        }
    }
    Ok(annotations.into_iter().map(|(_, a)| a).collect())
}

/// One annotation object per line.
pub fn write_coref(annotations: &[CorefAnnotation]) -> String {
    let mut out = String::new();
    for a in annotations {
        out.push_str(&serde_json::to_string(a).expect("coref annotations always serialize"));
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    const ONE: &str = r#"{"doc_id":"d1","chains":[{"chain_id":"c1","mentions":[{"token_ids":[0,1],"kind":"antecedent"},{"token_ids":[5],"kind":"pronoun"}]}]}"#;

    #[test]
    fn jsonl_and_array_forms_agree() {
        let a = parse_coref_str(ONE).unwrap();
        let b = parse_coref_str(&format!("[{ONE}]")).unwrap();
        assert_eq!(a, b);
        assert_eq!(a[0].chains[0].mentions[1].kind, MentionKind::Pronoun);
        assert_eq!(parse_coref_str(&write_coref(&a)).unwrap(), a);
    }

    #[test]
    fn chain_without_antecedent_is_rejected() {
        let bad = ONE.replace("antecedent", "pronoun");
        assert!(matches!(
            parse_coref_str(&bad),
            Err(ErrorKind::MalformedLine { line: 1, .. })
        ));
    }

    #[test]
    fn unknown_kind_is_a_json_error() {
        let bad = ONE.replace("\"pronoun\"", "\"cataphor\"");
        assert!(matches!(parse_coref_str(&bad), Err(ErrorKind::Json { line: 1, .. })));
    }
}
