use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use super::{at_path, malformed, parse_field, read_file, ErrorKind, Header, IngestError};
use crate::model::{BBox, StimulusDocument, TokenBox};

pub const STIMULUS_HEADER: &str = "token_id\ttext\tsent_id\tchar_start\tchar_end\tx0\ty0\tx1\ty1";

const COLUMNS: [&str; 9] = [
    "token_id",
    "text",
    "sent_id",
    "char_start",
    "char_end",
    "x0",
    "y0",
    "x1",
    "y1",
];

/// Parses one stimulus file. The document id is the file stem. When a
/// sibling `<stem>.txt` exists it is taken as the document's plain text and
/// every token span is checked against it; otherwise the text is rebuilt
/// from the token spans.
pub fn parse_stimulus(path: &Path) -> Result<StimulusDocument, IngestError> {
    let doc_id = path
        .file_stem()
        .and_then(|s| s.to_str())
        .ok_or_else(|| IngestError::new(path, ErrorKind::MissingHeader))?
        .to_string();
    let content = read_file(path)?;
    let sidecar = path.with_extension("txt");
    let plain_text = if sidecar.is_file() {
        Some(read_file(&sidecar)?)
    } else {
        None
    };
    at_path(path, parse_stimulus_str(&doc_id, &content, plain_text.as_deref()))
}

/// Parses every `*.tsv` file of a directory, sorted by document id.
pub fn parse_stimulus_dir(dir: &Path) -> Result<Vec<StimulusDocument>, IngestError> {
    let entries = std::fs::read_dir(dir).map_err(|e| IngestError::new(dir, ErrorKind::Io(e)))?;
    let mut paths: Vec<PathBuf> = Vec::new();
    for entry in entries {
        let entry = entry.map_err(|e| IngestError::new(dir, ErrorKind::Io(e)))?;
        let p = entry.path();
        if p.extension().is_some_and(|e| e == "tsv") {
            paths.push(p);
        }
    }
    paths.sort();
    paths.iter().map(|p| parse_stimulus(p)).collect()
}

pub fn parse_stimulus_str(
    doc_id: &str,
    content: &str,
    plain_text: Option<&str>,
) -> Result<StimulusDocument, ErrorKind> {
    let mut lines = content.lines().enumerate();
    let header_line = lines
        .by_ref()
        .find(|(_, l)| !l.trim().is_empty())
        .ok_or(ErrorKind::MissingHeader)?;
    let header = Header::parse(header_line.1.split('\t'), &COLUMNS, &[])?;

    let mut tokens: Vec<TokenBox> = Vec::new();
    let mut seen: HashMap<usize, usize> = HashMap::new();
    for (idx, raw) in lines {
        let line = idx + 1;
        if raw.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = raw.split('\t').collect();
        if fields.len() != header.width() {
            return Err(malformed(
                line,
                format!("expected {} fields, found {}", header.width(), fields.len()),
            ));
        }
        let token_id: usize = parse_field(header.get(&fields, 0), line, "token_id")?;
        let text = header.get(&fields, 1).unwrap_or_default().to_string();
        if text.is_empty() {
            return Err(malformed(line, "empty token text"));
        }
        let sentence_index = parse_field(header.get(&fields, 2), line, "sent_id")?;
        let char_start = parse_field(header.get(&fields, 3), line, "char_start")?;
        let char_end = parse_field(header.get(&fields, 4), line, "char_end")?;
        let bbox = BBox::new(
            parse_field(header.get(&fields, 5), line, "x0")?,
            parse_field(header.get(&fields, 6), line, "y0")?,
            parse_field(header.get(&fields, 7), line, "x1")?,
            parse_field(header.get(&fields, 8), line, "y1")?,
        );
        if !bbox.is_valid() {
            return Err(ErrorKind::OutOfRange {
                line,
                reason: "bounding box needs finite x0 < x1 and y0 < y1".into(),
            });
        }
        if char_start >= char_end {
            return Err(ErrorKind::OutOfRange {
                line,
                reason: "char_start must be below char_end".into(),
            });
        }
        if seen.insert(token_id, line).is_some() {
            return Err(ErrorKind::DuplicateTokenId { line, token_id });
        }
        tokens.push(TokenBox {
            token_id,
            text,
            sentence_index,
            char_start,
            char_end,
            bbox,
        });
    }
    tokens.sort_by_key(|t| t.token_id);
    if let Some((pos, t)) = tokens.iter().enumerate().find(|(i, t)| t.token_id != *i) {
        let line = seen[&t.token_id];
        return Err(malformed(
            line,
            format!(
                "token ids must be consecutive from 0; expected {pos}, found {}",
                t.token_id
            ),
        ));
    }
    let doc = match plain_text {
        Some(text) => StimulusDocument::new(doc_id, tokens, text.trim_end_matches(['\n', '\r'])),
        None => StimulusDocument::from_tokens(doc_id, tokens),
    };
    doc.map_err(ErrorKind::from)
}

pub fn write_stimulus(doc: &StimulusDocument) -> String {
    let mut out = String::with_capacity(doc.len() * 48);
    out.push_str(STIMULUS_HEADER);
    out.push('\n');
    for t in doc.tokens() {
        let _ = writeln!(
            out,
            "{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}",
            t.token_id, t.text, t.sentence_index, t.char_start, t.char_end, t.bbox.x0, t.bbox.y0, t.bbox.x1, t.bbox.y1
        );
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::DocumentError;

    const VALID: &str = "token_id\ttext\tsent_id\tchar_start\tchar_end\tx0\ty0\tx1\ty1\n\
0\tThe\t0\t0\t3\t100\t200\t140\t220\n\
1\tcat\t0\t4\t7\t150\t200\t190\t220\n\
2\tsat\t0\t8\t11\t200\t200\t240\t220\n";

    #[test]
    fn parses_three_tokens_in_order() {
        let doc = parse_stimulus_str("d1", VALID, None).unwrap();
        assert_eq!(doc.len(), 3);
        assert_eq!(doc.plain_text(), "The cat sat");
        let starts: Vec<usize> = doc.tokens().iter().map(|t| t.char_start).collect();
        assert_eq!(starts, vec![0, 4, 8]);
    }

    #[test]
    fn overlapping_boxes_are_rejected() {
        let bad = VALID.replace("200\t200\t240\t220", "180\t205\t240\t225");
        assert!(matches!(
            parse_stimulus_str("d1", &bad, None),
            Err(ErrorKind::OverlappingBoxes(1, 2))
        ));
    }

    #[test]
    fn edited_offset_is_a_mismatch() {
        // shift token 1's span by one character against the sidecar text
        let bad = VALID.replace("1\tcat\t0\t4\t7", "1\tcat\t0\t3\t6");
        assert!(matches!(
            parse_stimulus_str("d1", &bad, Some("The cat sat")),
            Err(ErrorKind::OffsetMismatch(1))
        ));
        // without a sidecar the span length must still agree with the text
        let bad = VALID.replace("1\tcat\t0\t4\t7", "1\tcat\t0\t4\t8");
        assert!(matches!(
            parse_stimulus_str("d1", &bad, None),
            Err(ErrorKind::OffsetMismatch(1))
        ));
    }

    #[test]
    fn duplicate_ids_and_gaps() {
        let dup = VALID.replace("2\tsat", "1\tsat");
        assert!(matches!(
            parse_stimulus_str("d1", &dup, None),
            Err(ErrorKind::DuplicateTokenId { line: 4, token_id: 1 })
        ));
        let gap = VALID.replace("2\tsat", "5\tsat");
        assert!(matches!(
            parse_stimulus_str("d1", &gap, None),
            Err(ErrorKind::MalformedLine { line: 4, .. })
        ));
    }

    #[test]
    fn malformed_rows_are_located() {
        let bad = format!("{VALID}3\tonly\t0\n");
        assert!(matches!(
            parse_stimulus_str("d1", &bad, None),
            Err(ErrorKind::MalformedLine { line: 5, .. })
        ));
        let bad = VALID.replace("140", "abc");
        assert!(matches!(
            parse_stimulus_str("d1", &bad, None),
            Err(ErrorKind::MalformedLine { line: 2, .. })
        ));
        assert!(matches!(
            parse_stimulus_str("d1", "token_id\ttext\n", None),
            Err(ErrorKind::MissingColumn(_))
        ));
    }

    #[test]
    fn extra_columns_are_ignored() {
        let extra: String = VALID
            .lines()
            .enumerate()
            .map(|(i, l)| {
                if i == 0 {
                    format!("{l}\tfont\n")
                } else {
                    format!("{l}\tserif\n")
                }
            })
            .collect();
        assert_eq!(parse_stimulus_str("d1", &extra, None).unwrap().len(), 3);
    }

    #[test]
    fn out_of_order_offsets_are_rejected() {
        let bad = VALID
            .replace("1\tcat\t0\t4\t7", "1\tcat\t0\t8\t11")
            .replace("2\tsat\t0\t8\t11", "2\tsat\t0\t4\t7");
        assert!(matches!(
            parse_stimulus_str("d1", &bad, None),
            Err(ErrorKind::Document(DocumentError::OutOfOrder(2)))
        ));
    }
}
