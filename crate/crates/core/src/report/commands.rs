use std::collections::{BTreeMap, BTreeSet};
use std::path::PathBuf;

use super::format::format_float;
use super::pipeline::{analyze, AnalysisOptions, Corpus, DocAnalysis, InputPaths};
use super::tables::{comparison_rows, csv_line, read_compare_csv, sort_rows, write_compare_csv, ComparisonRow};
use super::viz::{write_index, VizBundle};
use super::{write_output, ReportError};
use crate::attention::entropy;
use crate::ingest;
use crate::model::{AttentionDistribution, Family};
use crate::stats::{
    coref_saliency, participant_accuracy, percent_agreement, spearman, tukey_pairwise, tukey_permutation,
    AgreementError, ContrastResult, CorrelationResult, SpearmanError, DEFAULT_SEED,
};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SortKey {
    /// Ascending KL of one family.
    Family(Family),
    /// Ascending sum of KL over all families.
    SumKl,
}

/// Everything a command needs. Fields a command does not use are ignored.
#[derive(Debug, Clone)]
pub struct Config {
    pub inputs: InputPaths,
    pub options: AnalysisOptions,
    pub out_dir: PathBuf,
    /// Defaults to LSTM when present, otherwise the first family.
    pub sort: Option<SortKey>,
    /// Previously written `compare.csv` to use instead of raw inputs.
    pub compare: Option<PathBuf>,
    /// Permutation cross-check size for `pairwise`; 0 disables it.
    pub permutations: usize,
    pub seed: u64,
    /// Documents to export; empty means all.
    pub doc_ids: Vec<String>,
}

impl Config {
    pub fn new(inputs: InputPaths, out_dir: impl Into<PathBuf>) -> Self {
        Self {
            inputs,
            options: AnalysisOptions::default(),
            out_dir: out_dir.into(),
            sort: None,
            compare: None,
            permutations: 0,
            seed: DEFAULT_SEED,
            doc_ids: Vec::new(),
        }
    }
}

fn default_sort(families: &BTreeSet<Family>) -> SortKey {
    if families.contains(&Family::Lstm) {
        SortKey::Family(Family::Lstm)
    } else {
        SortKey::Family(families.first().copied().unwrap_or(Family::Lstm))
    }
}

fn compute_rows(cfg: &Config) -> Result<(Vec<ComparisonRow>, Vec<DocAnalysis>), ReportError> {
    let corpus = Corpus::load(&cfg.inputs, true, true)?;
    let outcomes = corpus.outcomes_by_doc()?;
    let analyses = analyze(&corpus, &cfg.options, &[], true)?;
    let rows = comparison_rows(&analyses, &outcomes)?;
    Ok((rows, analyses))
}

/// Rows from `--compare` when given, otherwise from the raw inputs; always
/// in doc_id order.
fn load_rows(cfg: &Config) -> Result<Vec<ComparisonRow>, ReportError> {
    let mut rows = match &cfg.compare {
        Some(path) => read_compare_csv(path)?,
        None => compute_rows(cfg)?.0,
    };
    rows.sort_by(|a, b| a.doc_id.cmp(&b.doc_id));
    Ok(rows)
}

fn entropy_csv(analyses: &[DocAnalysis], cfg: &Config) -> String {
    let mut out = String::from("doc_id,source,entropy\n");
    let fmt = |d: &AttentionDistribution| format_float(cfg.options.log_base.from_nats(entropy(d)));
    for a in analyses {
        out.push_str(&csv_line(&[a.doc_id.as_str(), "human", &fmt(&a.human.average)]));
        for (f, d) in &a.families {
            out.push_str(&csv_line(&[a.doc_id.as_str(), f.as_str(), &fmt(d)]));
        }
    }
    out
}

/// Writes `compare.csv` (per-document KL per family with model outcomes)
/// and `entropy.csv` (per-document entropy of every averaged distribution).
pub fn cmd_compare(cfg: &Config) -> Result<Vec<ComparisonRow>, ReportError> {
    let (mut rows, analyses) = compute_rows(cfg)?;
    let families: BTreeSet<Family> = rows.first().map(|r| r.kl.keys().copied().collect()).unwrap_or_default();
    let key = cfg.sort.clone().unwrap_or_else(|| default_sort(&families));
    sort_rows(&mut rows, &key)?;
    write_output(&cfg.out_dir.join("compare.csv"), &write_compare_csv(&rows))?;
    write_output(&cfg.out_dir.join("entropy.csv"), &entropy_csv(&analyses, cfg))?;
    Ok(rows)
}

#[derive(Debug, Clone, PartialEq)]
pub struct CorrelationRow {
    pub family: Family,
    pub ensemble_accuracy: f64,
    pub n: usize,
    pub result: Result<CorrelationResult, SpearmanError>,
}

impl CorrelationRow {
    pub fn status(&self) -> &'static str {
        match &self.result {
            Ok(_) => "ok",
            Err(SpearmanError::ConstantInput) => "constant-input",
            Err(SpearmanError::TooFewSamples(_)) => "too-few-samples",
            Err(SpearmanError::NonFinite) => "non-finite",
            Err(SpearmanError::LengthMismatch(..)) => "length-mismatch",
        }
    }
}

pub fn correlation_rows(rows: &[ComparisonRow]) -> Vec<CorrelationRow> {
    let families: Vec<Family> = rows.first().map(|r| r.kl.keys().copied().collect()).unwrap_or_default();
    families
        .into_iter()
        .map(|f| {
            let kl: Vec<f64> = rows.iter().map(|r| r.kl[&f]).collect();
            let correct: Vec<f64> = rows.iter().map(|r| r.n_correct[&f] as f64).collect();
            let majority = rows.iter().filter(|r| 2 * r.n_correct[&f] > r.n_models[&f]).count();
            let result = spearman(&kl, &correct);
            if let Err(e) = &result {
                log::warn!("{f}: {e}");
            }
            CorrelationRow {
                family: f,
                ensemble_accuracy: majority as f64 / rows.len() as f64,
                n: rows.len(),
                result,
            }
        })
        .collect()
}

/// Spearman correlation of per-document KL with the number of correct
/// models, per family. Writes `correlate.csv`.
pub fn cmd_correlate(cfg: &Config) -> Result<Vec<CorrelationRow>, ReportError> {
    let rows = load_rows(cfg)?;
    if rows.is_empty() {
        return Err(ReportError::Inconsistent("no documents to correlate".into()));
    }
    let out = correlation_rows(&rows);
    let mut text = String::from("family,ensemble_accuracy,rho,p,n,status\n");
    for r in &out {
        let (rho, p) = match &r.result {
            Ok(c) => (format_float(c.rho), format_float(c.p_value)),
            Err(_) => ("NA".to_string(), "NA".to_string()),
        };
        text.push_str(&csv_line(&[
            r.family.as_str(),
            &format_float(r.ensemble_accuracy),
            &rho,
            &p,
            &r.n.to_string(),
            r.status(),
        ]));
    }
    write_output(&cfg.out_dir.join("correlate.csv"), &text)?;
    Ok(out)
}

/// Average KL per family (`family_kl.csv`) and Tukey-adjusted contrasts
/// between families (`pairwise.csv`). With a non-zero permutation count
/// also writes `pairwise_permutation.csv`.
pub fn cmd_pairwise(cfg: &Config) -> Result<Vec<ContrastResult>, ReportError> {
    let rows = load_rows(cfg)?;
    let groups: BTreeMap<String, Vec<f64>> = rows
        .first()
        .map(|r| r.kl.keys().copied().collect::<Vec<_>>())
        .unwrap_or_default()
        .into_iter()
        .map(|f| (f.to_string(), rows.iter().map(|r| r.kl[&f]).collect()))
        .collect();
    if groups.len() < 2 {
        return Err(ReportError::Precondition(format!(
            "pairwise comparison needs at least 2 families, got {}",
            groups.len()
        )));
    }
    let contrasts = tukey_pairwise(&groups).map_err(|e| ReportError::Precondition(e.to_string()))?;

    let mut fam = String::from("family,avg_kl,n\n");
    for (name, values) in &groups {
        let avg = values.iter().sum::<f64>() / values.len() as f64;
        fam.push_str(&csv_line(&[
            name.as_str(),
            &format_float(avg),
            &values.len().to_string(),
        ]));
    }
    write_output(&cfg.out_dir.join("family_kl.csv"), &fam)?;

    let mut text = String::from("pair,estimate,std_error,t_value,p_adj\n");
    for c in &contrasts {
        text.push_str(&csv_line(&[
            c.pair_name(),
            format_float(c.estimate),
            format_float(c.std_error),
            format_float(c.t_value),
            format_float(c.p_adj),
        ]));
    }
    write_output(&cfg.out_dir.join("pairwise.csv"), &text)?;

    if cfg.permutations > 0 {
        let perm = tukey_permutation(&groups, cfg.permutations, cfg.seed)
            .map_err(|e| ReportError::Precondition(e.to_string()))?;
        let mut text = String::from("pair,p_perm,permutations,seed\n");
        for p in &perm {
            text.push_str(&csv_line(&[
                format!("{} vs {}", p.pair.0, p.pair.1),
                format_float(p.p_perm),
                cfg.permutations.to_string(),
                format!("{:#x}", cfg.seed),
            ]));
        }
        write_output(&cfg.out_dir.join("pairwise_permutation.csv"), &text)?;
    }
    Ok(contrasts)
}

#[derive(Debug, Clone, PartialEq)]
pub struct CorefRow {
    pub doc_id: String,
    /// `human` or a family name.
    pub source: String,
    pub report: crate::stats::SaliencyReport,
}

/// Antecedent versus pronoun saliency per document for the human average
/// and, when attention is given, every family. Writes `coref.csv`.
pub fn cmd_coref(cfg: &Config) -> Result<Vec<CorefRow>, ReportError> {
    let path = cfg.inputs.coref.as_ref().ok_or(ReportError::MissingInput("--coref"))?;
    let annotations = ingest::parse_coref(path)?;
    let with_models = cfg.inputs.attention.is_some();
    let corpus = Corpus::load(&cfg.inputs, with_models, false)?;
    for a in &annotations {
        if !corpus.docs.contains_key(&a.doc_id) {
            return Err(ReportError::UnknownDocument {
                input: "coref".into(),
                doc_id: a.doc_id.clone(),
            });
        }
    }
    let ids: Vec<String> = annotations.iter().map(|a| a.doc_id.clone()).collect();
    if ids.is_empty() {
        return Err(ReportError::Inconsistent("coreference input has no documents".into()));
    }
    let analyses = analyze(&corpus, &cfg.options, &ids, with_models)?;
    let by_doc: BTreeMap<&str, _> = annotations.iter().map(|a| (a.doc_id.as_str(), a)).collect();

    let mut out = Vec::new();
    for a in &analyses {
        let ann = by_doc[a.doc_id.as_str()];
        let mut sources: Vec<(String, &AttentionDistribution)> = vec![("human".into(), &a.human.average)];
        sources.extend(a.families.iter().map(|(f, d)| (f.to_string(), d)));
        for (source, dist) in sources {
            let report = coref_saliency(dist, ann).map_err(|e| ReportError::doc(&a.doc_id, e))?;
            out.push(CorefRow {
                doc_id: a.doc_id.clone(),
                source,
                report,
            });
        }
    }

    let opt = |v: Option<f64>| v.map(format_float).unwrap_or_else(|| "NA".into());
    let mut text = String::from("doc_id,source,antecedent_mean,pronoun_mean,antecedent_more_salient,flags\n");
    for r in &out {
        let flags: Vec<&str> = r.report.flags().iter().map(|f| f.as_str()).collect();
        text.push_str(&csv_line(&[
            r.doc_id.clone(),
            r.source.clone(),
            opt(r.report.antecedent_mean),
            opt(r.report.pronoun_mean),
            r.report.antecedent_more_salient.to_string(),
            flags.join(";"),
        ]));
    }
    write_output(&cfg.out_dir.join("coref.csv"), &text)?;
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
pub struct AgreementRow {
    pub group: String,
    pub n_docs: usize,
    pub n_participants: usize,
    pub iaa: f64,
    pub accuracy: f64,
}

fn agreement_error(e: AgreementError) -> ReportError {
    match e {
        AgreementError::EmptyInput => ReportError::Inconsistent(e.to_string()),
        AgreementError::TooFewParticipants { .. } => ReportError::Precondition(e.to_string()),
    }
}

/// Inter-annotator agreement and answer accuracy per group of the answers
/// table (`all` when no group is given), plus an `overall` row when there
/// are several groups. Writes `agreement.csv`.
pub fn cmd_agreement(cfg: &Config) -> Result<Vec<AgreementRow>, ReportError> {
    let path = cfg
        .inputs
        .answers
        .as_ref()
        .ok_or(ReportError::MissingInput("--answers"))?;
    let selections = ingest::parse_answers(path)?;
    if selections.is_empty() {
        return Err(ReportError::Inconsistent("answers input is empty".into()));
    }
    let mut groups: BTreeMap<String, Vec<crate::model::AnswerSelection>> = BTreeMap::new();
    for s in &selections {
        let g = if s.group.is_empty() { "all" } else { s.group.as_str() };
        groups.entry(g.to_string()).or_default().push(s.clone());
    }
    let row = |group: String, sel: &[crate::model::AnswerSelection]| -> Result<AgreementRow, ReportError> {
        let docs: BTreeSet<&str> = sel.iter().map(|s| s.doc_id.as_str()).collect();
        let people: BTreeSet<&str> = sel.iter().map(|s| s.participant_id.as_str()).collect();
        Ok(AgreementRow {
            group,
            n_docs: docs.len(),
            n_participants: people.len(),
            iaa: percent_agreement(sel).map_err(agreement_error)?,
            accuracy: participant_accuracy(sel).map_err(agreement_error)?,
        })
    };
    let mut out = Vec::new();
    for (g, sel) in &groups {
        out.push(row(g.clone(), sel)?);
    }
    if groups.len() > 1 {
        out.push(row("overall".into(), &selections)?);
    }
    let mut text = String::from("group,n_docs,n_participants,iaa,accuracy\n");
    for r in &out {
        text.push_str(&csv_line(&[
            r.group.clone(),
            r.n_docs.to_string(),
            r.n_participants.to_string(),
            format_float(r.iaa),
            format_float(r.accuracy),
        ]));
    }
    write_output(&cfg.out_dir.join("agreement.csv"), &text)?;
    Ok(out)
}

/// One viewer bundle per selected document under `viz/`, plus
/// `viz/index.json` listing every bundle in that directory.
pub fn cmd_export_viz(cfg: &Config) -> Result<Vec<PathBuf>, ReportError> {
    let corpus = Corpus::load(&cfg.inputs, true, false)?;
    let analyses = analyze(&corpus, &cfg.options, &cfg.doc_ids, true)?;
    let dir = cfg.out_dir.join("viz");
    std::fs::create_dir_all(&dir).map_err(|e| ReportError::io(&dir, e))?;
    let mut written = Vec::new();
    for a in &analyses {
        let bundle = VizBundle::new(&corpus.docs[&a.doc_id], a, &cfg.options);
        let path = dir.join(format!("{}.json", a.doc_id));
        write_output(&path, &bundle.to_json())?;
        written.push(path);
    }
    let index = dir.join(super::VIZ_INDEX);
    write_output(&index, &write_index(&dir)?)?;
    written.push(index);
    Ok(written)
}
