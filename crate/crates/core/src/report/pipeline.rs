use std::collections::{BTreeMap, BTreeSet};
use std::path::PathBuf;

use rayon::prelude::*;

use super::ReportError;
use crate::attention::{ensemble_average, model_distribution, AlignMode, Orientation};
use crate::gaze::{
    average_participants, counts_from_resolved, resolve_fixations, to_distribution, GazeCountVector, Weighting,
};
use crate::ingest;
use crate::model::{
    AttentionDistribution, Family, FixationEvent, GazeRecord, ModelAttentionFile, OutcomeRecord, StimulusDocument,
};
use crate::stats::{kl_divergence, LogBase, DEFAULT_EPSILON};

#[derive(Debug, Clone, Default)]
pub struct InputPaths {
    pub stimuli: Option<PathBuf>,
    pub gaze: Option<PathBuf>,
    pub attention: Option<PathBuf>,
    pub outcomes: Option<PathBuf>,
    pub coref: Option<PathBuf>,
    pub answers: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AnalysisOptions {
    pub epsilon: f64,
    pub weighting: Weighting,
    pub snap: f64,
    pub align: AlignMode,
    pub orientation: Orientation,
    pub log_base: LogBase,
}

impl Default for AnalysisOptions {
    fn default() -> Self {
        Self {
            epsilon: DEFAULT_EPSILON,
            weighting: Weighting::Duration,
            snap: 0.0,
            align: AlignMode::Sum,
            orientation: Orientation::Rows,
            log_base: LogBase::E,
        }
    }
}

/// Parsed inputs. Optional inputs that were not requested stay empty.
#[derive(Debug, Clone, Default)]
pub struct Corpus {
    pub docs: BTreeMap<String, StimulusDocument>,
    pub gaze: Vec<GazeRecord>,
    pub attention: Vec<ModelAttentionFile>,
    pub outcomes: Vec<OutcomeRecord>,
}

impl Corpus {
    /// Loads stimuli and gaze, plus attention and outcomes when asked for.
    pub fn load(paths: &InputPaths, with_attention: bool, with_outcomes: bool) -> Result<Corpus, ReportError> {
        let stimuli = paths.stimuli.as_ref().ok_or(ReportError::MissingInput("--stimuli"))?;
        let gaze = paths.gaze.as_ref().ok_or(ReportError::MissingInput("--gaze"))?;
        let docs = ingest::parse_stimulus_dir(stimuli)?
            .into_iter()
            .map(|d| (d.doc_id().to_string(), d))
            .collect();
        let mut corpus = Corpus {
            docs,
            gaze: ingest::parse_gaze(gaze)?,
            ..Corpus::default()
        };
        if with_attention {
            let p = paths
                .attention
                .as_ref()
                .ok_or(ReportError::MissingInput("--attention"))?;
            corpus.attention = ingest::parse_model_attention(p)?;
        }
        if with_outcomes {
            let p = paths.outcomes.as_ref().ok_or(ReportError::MissingInput("--outcomes"))?;
            corpus.outcomes = ingest::parse_outcomes(p)?;
        }
        Ok(corpus)
    }

    /// Families present in the attention input.
    pub fn families(&self) -> BTreeSet<Family> {
        self.attention.iter().map(|f| f.family).collect()
    }

    fn gaze_by_doc(&self) -> Result<BTreeMap<&str, Vec<&GazeRecord>>, ReportError> {
        let mut out: BTreeMap<&str, Vec<&GazeRecord>> = BTreeMap::new();
        for r in &self.gaze {
            if !self.docs.contains_key(&r.doc_id) {
                return Err(ReportError::UnknownDocument {
                    input: "gaze".into(),
                    doc_id: r.doc_id.clone(),
                });
            }
            out.entry(r.doc_id.as_str()).or_default().push(r);
        }
        for records in out.values_mut() {
            records.sort_by(|a, b| a.participant_id.cmp(&b.participant_id));
        }
        Ok(out)
    }

    fn attention_by_doc(&self) -> Result<BTreeMap<&str, Vec<&ModelAttentionFile>>, ReportError> {
        let mut out: BTreeMap<&str, Vec<&ModelAttentionFile>> = BTreeMap::new();
        for f in &self.attention {
            if !self.docs.contains_key(&f.doc_id) {
                return Err(ReportError::UnknownDocument {
                    input: "attention".into(),
                    doc_id: f.doc_id.clone(),
                });
            }
            out.entry(f.doc_id.as_str()).or_default().push(f);
        }
        for files in out.values_mut() {
            files.sort_by(|a, b| (a.family, &a.model_id).cmp(&(b.family, &b.model_id)));
        }
        Ok(out)
    }

    /// Outcomes keyed by document then family, checked against the
    /// documents and families of the other inputs.
    pub fn outcomes_by_doc(&self) -> Result<BTreeMap<&str, BTreeMap<Family, &OutcomeRecord>>, ReportError> {
        let families = self.families();
        let mut out: BTreeMap<&str, BTreeMap<Family, &OutcomeRecord>> = BTreeMap::new();
        for o in &self.outcomes {
            if !self.docs.contains_key(&o.doc_id) {
                return Err(ReportError::UnknownDocument {
                    input: "outcomes".into(),
                    doc_id: o.doc_id.clone(),
                });
            }
            if !families.contains(&o.family) {
                return Err(ReportError::Inconsistent(format!(
                    "outcomes list family {} which has no attention input",
                    o.family
                )));
            }
            out.entry(o.doc_id.as_str()).or_default().insert(o.family, o);
        }
        for doc_id in self.docs.keys() {
            let have = out.get(doc_id.as_str());
            for fam in &families {
                if !have.is_some_and(|m| m.contains_key(fam)) {
                    return Err(ReportError::MissingDocument {
                        input: format!("outcomes ({fam})"),
                        doc_id: doc_id.clone(),
                    });
                }
            }
        }
        Ok(out)
    }
}

/// One participant's fixations on one document after hit testing.
#[derive(Debug, Clone, PartialEq)]
pub struct ParticipantTrack {
    pub participant_id: String,
    pub fixations: Vec<FixationEvent>,
    pub resolved: Vec<Option<usize>>,
    pub counts: GazeCountVector,
}

#[derive(Debug, Clone, PartialEq)]
pub struct HumanAttention {
    /// Every participant, sorted by id.
    pub tracks: Vec<ParticipantTrack>,
    /// Mean over participants with non-zero mapped mass.
    pub average: AttentionDistribution,
}

/// Resolves all gaze records of a document and averages the participants
/// that have any mapped fixation mass.
pub fn human_attention(
    doc: &StimulusDocument,
    records: &[&GazeRecord],
    opts: &AnalysisOptions,
) -> Result<HumanAttention, ReportError> {
    let mut tracks = Vec::with_capacity(records.len());
    let mut dists = Vec::with_capacity(records.len());
    for r in records {
        let resolved = resolve_fixations(r, doc, opts.snap)
            .map_err(|e| ReportError::doc(doc.doc_id(), format!("participant `{}`: {e}", r.participant_id)))?;
        let counts = counts_from_resolved(r, doc.len(), &resolved, opts.weighting);
        match to_distribution(&counts) {
            Ok(d) => dists.push(d),
            Err(_) => log::warn!(
                "document `{}`: participant `{}` has no fixation on any word, skipped",
                doc.doc_id(),
                r.participant_id
            ),
        }
        tracks.push(ParticipantTrack {
            participant_id: r.participant_id.clone(),
            fixations: r.fixations.clone(),
            resolved,
            counts,
        });
    }
    let average = average_participants(&dists)
        .map_err(|_| ReportError::doc(doc.doc_id(), "no participant has a fixation on any word"))?;
    Ok(HumanAttention { tracks, average })
}

/// Per-family ensemble of normalized model distributions. Models within a
/// family are averaged in model-id order.
pub fn family_attention(
    doc: &StimulusDocument,
    files: &[&ModelAttentionFile],
    opts: &AnalysisOptions,
) -> Result<BTreeMap<Family, AttentionDistribution>, ReportError> {
    let mut by_family: BTreeMap<Family, Vec<&ModelAttentionFile>> = BTreeMap::new();
    for f in files {
        by_family.entry(f.family).or_default().push(f);
    }
    let mut out = BTreeMap::new();
    for (family, mut models) in by_family {
        models.sort_by(|a, b| a.model_id.cmp(&b.model_id));
        let dists = models
            .iter()
            .map(|f| {
                model_distribution(f, doc, opts.align, opts.orientation)
                    .map_err(|e| ReportError::doc(doc.doc_id(), format!("model `{}`: {e}", f.model_id)))
            })
            .collect::<Result<Vec<_>, _>>()?;
        let avg = ensemble_average(&dists, family).map_err(|e| ReportError::doc(doc.doc_id(), e))?;
        out.insert(family, avg);
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
pub struct DocAnalysis {
    pub doc_id: String,
    pub human: HumanAttention,
    pub families: BTreeMap<Family, AttentionDistribution>,
    /// KL(human ‖ family) in the configured log base.
    pub kl: BTreeMap<Family, f64>,
}

/// Runs the per-document analysis, in parallel over documents, and
/// returns results in document-id order. `doc_ids` restricts the set of
/// documents; an empty slice means all of them. When `with_models` is
/// false the attention input is ignored.
pub fn analyze(
    corpus: &Corpus,
    opts: &AnalysisOptions,
    doc_ids: &[String],
    with_models: bool,
) -> Result<Vec<DocAnalysis>, ReportError> {
    let selected: Vec<&StimulusDocument> = if doc_ids.is_empty() {
        corpus.docs.values().collect()
    } else {
        let mut ids: Vec<&String> = doc_ids.iter().collect();
        ids.sort();
        ids.dedup();
        ids.into_iter()
            .map(|id| {
                corpus.docs.get(id).ok_or_else(|| ReportError::UnknownDocument {
                    input: "the document list".into(),
                    doc_id: id.clone(),
                })
            })
            .collect::<Result<_, _>>()?
    };
    let gaze = corpus.gaze_by_doc()?;
    let attention = if with_models {
        corpus.attention_by_doc()?
    } else {
        BTreeMap::new()
    };
    let families = if with_models {
        corpus.families()
    } else {
        BTreeSet::new()
    };
    if with_models && families.is_empty() {
        return Err(ReportError::Inconsistent("attention input has no models".into()));
    }

    selected
        .par_iter()
        .map(|doc| {
            let id = doc.doc_id();
            let records = gaze.get(id).ok_or_else(|| ReportError::MissingDocument {
                input: "gaze".into(),
                doc_id: id.to_string(),
            })?;
            let human = human_attention(doc, records, opts)?;
            let mut fam = BTreeMap::new();
            let mut kl = BTreeMap::new();
            if with_models {
                let files = attention.get(id).map(Vec::as_slice).unwrap_or(&[]);
                fam = family_attention(doc, files, opts)?;
                for f in &families {
                    let dist = fam.get(f).ok_or_else(|| ReportError::MissingDocument {
                        input: format!("attention ({f})"),
                        doc_id: id.to_string(),
                    })?;
                    let nats = kl_divergence(&human.average, dist, opts.epsilon)
                        .map_err(|e| ReportError::Precondition(format!("document `{id}`, {f}: {e}")))?;
                    kl.insert(*f, opts.log_base.from_nats(nats));
                }
            }
            Ok(DocAnalysis {
                doc_id: id.to_string(),
                human,
                families: fam,
                kl,
            })
        })
        .collect()
}
