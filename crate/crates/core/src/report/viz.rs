use std::collections::BTreeMap;
use std::path::Path;

use super::format::Json;
use super::pipeline::{AnalysisOptions, DocAnalysis};
use super::{ReportError, VERSION};
use crate::model::StimulusDocument;

/// File name of the bundle listing inside `viz/`.
pub const VIZ_INDEX: &str = "index.json";

/// Everything the scanpath viewer needs for one document.
#[derive(Debug, Clone, PartialEq)]
pub struct VizBundle {
    pub doc_id: String,
    json: Json,
}

impl VizBundle {
    pub fn new(doc: &StimulusDocument, analysis: &DocAnalysis, opts: &AnalysisOptions) -> Self {
        let tokens = doc
            .tokens()
            .iter()
            .map(|t| {
                Json::obj([
                    ("id", Json::Int(t.token_id as i64)),
                    ("text", Json::str(&t.text)),
                    ("box", Json::nums(&[t.bbox.x0, t.bbox.y0, t.bbox.x1, t.bbox.y1])),
                ])
            })
            .collect();
        let participants = analysis
            .human
            .tracks
            .iter()
            .map(|track| {
                let fixations = track
                    .fixations
                    .iter()
                    .zip(&track.resolved)
                    .map(|(f, tok)| {
                        Json::obj([
                            ("t", Json::Num(f.t_ms)),
                            ("x", Json::Num(f.x)),
                            ("y", Json::Num(f.y)),
                            ("dur", Json::Num(f.dur_ms)),
                            ("token", tok.map_or(Json::Null, |t| Json::Int(t as i64))),
                        ])
                    })
                    .collect();
                Json::obj([
                    ("id", Json::str(&track.participant_id)),
                    ("fixations", Json::Arr(fixations)),
                ])
            })
            .collect();
        let models: BTreeMap<String, Json> = analysis
            .families
            .iter()
            .map(|(f, d)| (f.to_string(), Json::nums(d.weights())))
            .collect();
        let json = Json::obj([
            (
                "doc",
                Json::obj([("doc_id", Json::str(doc.doc_id())), ("tokens", Json::Arr(tokens))]),
            ),
            (
                "human",
                Json::obj([
                    ("participants", Json::Arr(participants)),
                    ("average", Json::nums(analysis.human.average.weights())),
                ]),
            ),
            ("models", Json::Obj(models)),
            (
                "meta",
                Json::obj([
                    ("epsilon", Json::Num(opts.epsilon)),
                    ("weighting", Json::str(opts.weighting.as_str())),
                    ("snap", Json::Num(opts.snap)),
                    ("align", Json::str(opts.align.as_str())),
                    ("version", Json::str(VERSION)),
                ]),
            ),
        ]);
        VizBundle {
            doc_id: doc.doc_id().to_string(),
            json,
        }
    }

    pub fn json(&self) -> &Json {
        &self.json
    }

    /// Serialized bundle with a trailing newline.
    pub fn to_json(&self) -> String {
        let mut s = self.json.to_string_compact();
        s.push('\n');
        s
    }
}

/// Index of every bundle currently in `dir`, so exporting a subset of
/// documents keeps earlier exports listed.
pub(crate) fn write_index(dir: &Path) -> Result<String, ReportError> {
    let mut ids = Vec::new();
    let entries = std::fs::read_dir(dir).map_err(|e| ReportError::io(dir, e))?;
    for entry in entries {
        let path = entry.map_err(|e| ReportError::io(dir, e))?.path();
        let is_bundle =
            path.extension().is_some_and(|e| e == "json") && path.file_name().is_some_and(|n| n != VIZ_INDEX);
        if is_bundle {
            if let Some(stem) = path.file_stem().and_then(|s| s.to_str()) {
                ids.push(stem.to_string());
            }
        }
    }
    ids.sort();
    let docs = ids
        .into_iter()
        .map(|id| {
            let file = format!("{id}.json");
            Json::obj([("doc_id", Json::Str(id)), ("path", Json::Str(file))])
        })
        .collect();
    let mut s = Json::obj([("docs", Json::Arr(docs)), ("version", Json::str(VERSION))]).to_string_compact();
    s.push('\n');
    Ok(s)
}
