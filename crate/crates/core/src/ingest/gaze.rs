use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use super::{at_path, malformed, parse_field, read_file, ErrorKind, Header, IngestError};
use crate::model::{FixationEvent, GazeRecord};

pub const GAZE_HEADER: &str = "participant_id\tdoc_id\tt_ms\tx\ty\tdur_ms\tword_id";

const REQUIRED: [&str; 6] = ["participant_id", "doc_id", "t_ms", "x", "y", "dur_ms"];
const OPTIONAL: [&str; 1] = ["word_id"];

pub fn parse_gaze(path: &Path) -> Result<Vec<GazeRecord>, IngestError> {
    let content = read_file(path)?;
    at_path(path, parse_gaze_str(&content))
}

/// Groups fixations by `(participant_id, doc_id)`, concatenating repeated
/// blocks, and stably sorts each group by timestamp. Records come back
/// ordered by participant then document.
pub fn parse_gaze_str(content: &str) -> Result<Vec<GazeRecord>, ErrorKind> {
    let mut lines = content.lines().enumerate();
    let header_line = lines
        .by_ref()
        .find(|(_, l)| !l.trim().is_empty())
        .ok_or(ErrorKind::MissingHeader)?;
    let header = Header::parse(header_line.1.split('\t'), &REQUIRED, &OPTIONAL)?;

    let mut groups: BTreeMap<(String, String), Vec<FixationEvent>> = BTreeMap::new();
    for (idx, raw) in lines {
        let line = idx + 1;
        if raw.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = raw.split('\t').collect();
        // a trailing empty word_id may be dropped by some exporters
        if fields.len() != header.width() && fields.len() + 1 != header.width() {
            return Err(malformed(
                line,
                format!("expected {} fields, found {}", header.width(), fields.len()),
            ));
        }
        let participant: String = header.get(&fields, 0).unwrap_or_default().trim().to_string();
        let doc: String = header.get(&fields, 1).unwrap_or_default().trim().to_string();
        if participant.is_empty() || doc.is_empty() {
            return Err(malformed(line, "empty participant_id or doc_id"));
        }
        let t_ms: f64 = parse_field(header.get(&fields, 2), line, "t_ms")?;
        let x: f64 = parse_field(header.get(&fields, 3), line, "x")?;
        let y: f64 = parse_field(header.get(&fields, 4), line, "y")?;
        let dur_ms: f64 = parse_field(header.get(&fields, 5), line, "dur_ms")?;
        if !(t_ms.is_finite() && x.is_finite() && y.is_finite()) {
            return Err(ErrorKind::NonFiniteCoordinate(line));
        }
        if !(dur_ms > 0.0 && dur_ms.is_finite()) {
            return Err(ErrorKind::NegativeDuration(line));
        }
        let word_id = match header.get(&fields, 6).map(str::trim) {
            None | Some("") => None,
            Some(raw) => Some(parse_field::<usize>(Some(raw), line, "word_id")?),
        };
        groups.entry((participant, doc)).or_default().push(FixationEvent {
            t_ms,
            x,
            y,
            dur_ms,
            word_id,
        });
    }

    Ok(groups
        .into_iter()
        .map(|((participant_id, doc_id), mut fixations)| {
            fixations.sort_by(|a, b| a.t_ms.total_cmp(&b.t_ms));
            GazeRecord {
                participant_id,
                doc_id,
                fixations,
            }
        })
        .collect())
}

pub fn write_gaze(records: &[GazeRecord]) -> String {
    let mut out = String::new();
    out.push_str(GAZE_HEADER);
    out.push('\n');
    for r in records {
        for f in &r.fixations {
            let _ = write!(
                out,
                "{}\t{}\t{}\t{}\t{}\t{}\t",
                r.participant_id, r.doc_id, f.t_ms, f.x, f.y, f.dur_ms
            );
            if let Some(w) = f.word_id {
                let _ = write!(out, "{w}");
            }
            out.push('\n');
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    const TWO: &str = "participant_id\tdoc_id\tt_ms\tx\ty\tdur_ms\tword_id\n\
p1\td1\t0\t130\t210\t200\t\n\
p1\td1\t250\t170\t210\t180\t1\n";

    #[test]
    fn groups_two_lines_into_one_record() {
        let recs = parse_gaze_str(TWO).unwrap();
        assert_eq!(recs.len(), 1);
        assert_eq!(recs[0].fixations.len(), 2);
        assert_eq!(recs[0].fixations[0].word_id, None);
        assert_eq!(recs[0].fixations[1].word_id, Some(1));
        assert!(recs[0].fixations[0].t_ms <= recs[0].fixations[1].t_ms);
    }

    #[test]
    fn negative_duration_is_rejected() {
        let bad = TWO.replace("\t180\t1", "\t-5\t1");
        assert!(matches!(parse_gaze_str(&bad), Err(ErrorKind::NegativeDuration(3))));
    }

    #[test]
    fn non_finite_coordinate_is_rejected() {
        let bad = TWO.replace("\t170\t", "\tNaN\t");
        assert!(matches!(parse_gaze_str(&bad), Err(ErrorKind::NonFiniteCoordinate(3))));
    }

    #[test]
    fn shuffled_lines_are_resorted_stably() {
        let body = [
            "p1\td1\t10\t1\t1\t100\t",
            "p1\td1\t20\t2\t2\t100\t",
            "p1\td1\t20\t3\t3\t100\t",
            "p1\td1\t30\t4\t4\t100\t",
        ];
        let sorted = parse_gaze_str(&format!("{GAZE_HEADER}\n{}\n", body.join("\n"))).unwrap();
        let shuffled = [body[3], body[1], body[0], body[2]];
        let resorted = parse_gaze_str(&format!("{GAZE_HEADER}\n{}\n", shuffled.join("\n"))).unwrap();
        assert_eq!(sorted, resorted);
        // equal timestamps keep file order: x=2 precedes x=3
        let xs: Vec<f64> = resorted[0].fixations.iter().map(|f| f.x).collect();
        assert_eq!(xs, vec![1.0, 2.0, 3.0, 4.0]);
    }

    #[test]
    fn split_sessions_are_concatenated() {
        let text = format!("{GAZE_HEADER}\np1\td1\t50\t1\t1\t100\t\np2\td1\t0\t1\t1\t100\t\np1\td1\t10\t1\t1\t100\t\n");
        let recs = parse_gaze_str(&text).unwrap();
        assert_eq!(recs.len(), 2);
        assert_eq!(recs[0].participant_id, "p1");
        assert_eq!(
            recs[0].fixations.iter().map(|f| f.t_ms).collect::<Vec<_>>(),
            vec![10.0, 50.0]
        );
    }

    #[test]
    fn word_id_column_is_optional() {
        let text = "participant_id\tdoc_id\tt_ms\tx\ty\tdur_ms\np1\td1\t0\t1\t1\t100\n";
        assert_eq!(parse_gaze_str(text).unwrap()[0].fixations[0].word_id, None);
    }
}
