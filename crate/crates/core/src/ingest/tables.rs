use std::collections::HashSet;
use std::path::Path;

use super::{at_path, malformed, parse_field, read_file, ErrorKind, Header, IngestError};
use crate::model::{AnswerSelection, Family, OutcomeRecord, MAX_ANSWER_INDEX};

pub const OUTCOMES_HEADER: &str = "doc_id,family,n_correct,n_models";
pub const ANSWERS_HEADER: &str = "participant_id,doc_id,selected,correct";

/// Reads a header plus rows, handing each row to `row` with its 1-based line.
fn read_csv<T>(
    content: &str,
    required: &[&str],
    optional: &[&str],
    mut row: impl FnMut(&Header, &[&str], usize) -> Result<T, ErrorKind>,
) -> Result<Vec<T>, ErrorKind> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(content.as_bytes());
    let mut records = rdr.records();
    let header_rec = records
        .next()
        .ok_or(ErrorKind::MissingHeader)?
        .map_err(|e| malformed(1, e.to_string()))?;
    let header = Header::parse(header_rec.iter(), required, optional)?;
    let mut out = Vec::new();
    for rec in records {
        let rec = rec.map_err(|e| {
            let line = e.position().map(|p| p.line() as usize).unwrap_or(0);
            malformed(line, e.to_string())
        })?;
        let line = rec.position().map(|p| p.line() as usize).unwrap_or(0);
        if rec.iter().all(str::is_empty) {
            continue;
        }
        let fields: Vec<&str> = rec.iter().collect();
        if fields.len() != header.width() {
            return Err(malformed(
                line,
                format!("expected {} fields, found {}", header.width(), fields.len()),
            ));
        }
        out.push(row(&header, &fields, line)?);
    }
    Ok(out)
}

pub fn parse_outcomes(path: &Path) -> Result<Vec<OutcomeRecord>, IngestError> {
    let content = read_file(path)?;
    at_path(path, parse_outcomes_str(&content))
}

pub fn parse_outcomes_str(content: &str) -> Result<Vec<OutcomeRecord>, ErrorKind> {
    let mut seen = HashSet::new();
    read_csv(
        content,
        &["doc_id", "family", "n_correct", "n_models"],
        &[],
        |h, f, line| {
            let doc_id = h.get(f, 0).unwrap_or_default().to_string();
            if doc_id.is_empty() {
                return Err(malformed(line, "empty doc_id"));
            }
            let family: Family = h
                .get(f, 1)
                .unwrap_or_default()
                .parse()
                .map_err(|e| malformed(line, format!("{e}")))?;
            let n_correct: u32 = parse_field(h.get(f, 2), line, "n_correct")?;
            let n_models: u32 = parse_field(h.get(f, 3), line, "n_models")?;
            if n_models == 0 || n_correct > n_models {
                return Err(ErrorKind::OutOfRange {
                    line,
                    reason: format!("need 0 <= n_correct ({n_correct}) <= n_models ({n_models}) and n_models > 0"),
                });
            }
            if !seen.insert((doc_id.clone(), family)) {
                return Err(ErrorKind::DuplicateRecord {
                    line,
                    key: format!("({doc_id}, {family})"),
                });
            }
            Ok(OutcomeRecord {
                doc_id,
                family,
                n_correct,
                n_models,
            })
        },
    )
}

pub fn write_outcomes(records: &[OutcomeRecord]) -> String {
    let mut out = format!("{OUTCOMES_HEADER}\n");
    for r in records {
        out.push_str(&format!("{},{},{},{}\n", r.doc_id, r.family, r.n_correct, r.n_models));
    }
    out
}

pub fn parse_answers(path: &Path) -> Result<Vec<AnswerSelection>, IngestError> {
    let content = read_file(path)?;
    at_path(path, parse_answers_str(&content))
}

/// Answer selections; an optional trailing `group` column names the
/// study/schema a row belongs to.
pub fn parse_answers_str(content: &str) -> Result<Vec<AnswerSelection>, ErrorKind> {
    let mut seen = HashSet::new();
    read_csv(
        content,
        &["participant_id", "doc_id", "selected", "correct"],
        &["group"],
        |h, f, line| {
            let participant_id = h.get(f, 0).unwrap_or_default().to_string();
            let doc_id = h.get(f, 1).unwrap_or_default().to_string();
            if participant_id.is_empty() || doc_id.is_empty() {
                return Err(malformed(line, "empty participant_id or doc_id"));
            }
            let selected: u8 = parse_field(h.get(f, 2), line, "selected")?;
            let correct: u8 = parse_field(h.get(f, 3), line, "correct")?;
            if selected > MAX_ANSWER_INDEX || correct > MAX_ANSWER_INDEX {
                return Err(ErrorKind::OutOfRange {
                    line,
                    reason: format!("answer indices must lie in 0..={MAX_ANSWER_INDEX}"),
                });
            }
            if !seen.insert((participant_id.clone(), doc_id.clone())) {
                return Err(ErrorKind::DuplicateRecord {
                    line,
                    key: format!("({participant_id}, {doc_id})"),
                });
            }
            Ok(AnswerSelection {
                participant_id,
                doc_id,
                selected,
                correct,
                group: h.get(f, 4).unwrap_or_default().to_string(),
            })
        },
    )
}

pub fn write_answers(selections: &[AnswerSelection]) -> String {
    let grouped = selections.iter().any(|s| !s.group.is_empty());
    let mut out = String::from(ANSWERS_HEADER);
    if grouped {
        out.push_str(",group");
    }
    out.push('\n');
    for s in selections {
        out.push_str(&format!(
            "{},{},{},{}",
            s.participant_id, s.doc_id, s.selected, s.correct
        ));
        if grouped {
            out.push(',');
            out.push_str(&s.group);
        }
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn outcome_row_parses() {
        let recs = parse_outcomes_str("doc_id,family,n_correct,n_models\ndoc7,LSTM,9,9\n").unwrap();
        assert_eq!(
            recs,
            vec![OutcomeRecord {
                doc_id: "doc7".into(),
                family: Family::Lstm,
                n_correct: 9,
                n_models: 9
            }]
        );
    }

    #[test]
    fn outcome_range_error() {
        assert!(matches!(
            parse_outcomes_str("doc_id,family,n_correct,n_models\ndoc7,LSTM,10,9\n"),
            Err(ErrorKind::OutOfRange { line: 2, .. })
        ));
        assert!(matches!(
            parse_outcomes_str("doc_id,family,n_correct,n_models\ndoc7,LSTM,-1,9\n"),
            Err(ErrorKind::MalformedLine { line: 2, .. })
        ));
    }

    #[test]
    fn full_fixture_has_one_row_per_doc_and_family() {
        let mut text = String::from("doc_id,family,n_correct,n_models\n");
        for d in 0..32 {
            for fam in ["CNN", "LSTM", "XLNET"] {
                text.push_str(&format!("doc{d},{fam},{},9\n", d % 10));
            }
        }
        let recs = parse_outcomes_str(&text).unwrap();
        assert_eq!(recs.len(), 96);
        assert_eq!(parse_outcomes_str(&write_outcomes(&recs)).unwrap(), recs);
    }

    #[test]
    fn duplicate_outcome_rows() {
        let text = "doc_id,family,n_correct,n_models\nd,CNN,1,9\nd,cnn,2,9\n";
        assert!(matches!(
            parse_outcomes_str(text),
            Err(ErrorKind::DuplicateRecord { line: 3, .. })
        ));
    }

    #[test]
    fn answers_with_and_without_group() {
        let plain = parse_answers_str("participant_id,doc_id,selected,correct\np1,d1,0,0\np2,d1,4,0\n").unwrap();
        assert_eq!(plain.len(), 2);
        assert_eq!(plain[1].selected, 4);
        assert!(plain[0].group.is_empty());
        let grouped = parse_answers_str("participant_id,doc_id,selected,correct,group\np1,d1,0,0,Study1-A\n").unwrap();
        assert_eq!(grouped[0].group, "Study1-A");
        assert_eq!(parse_answers_str(&write_answers(&grouped)).unwrap(), grouped);
        assert!(matches!(
            parse_answers_str("participant_id,doc_id,selected,correct\np1,d1,5,0\n"),
            Err(ErrorKind::OutOfRange { line: 2, .. })
        ));
    }
}
