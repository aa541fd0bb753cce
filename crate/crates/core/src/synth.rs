//! Deterministic synthetic corpus shaped like a small eye-tracking reading
//! study: documents of a few hundred words laid out on a page, fixation
//! logs from several participants, and attention exports from three model
//! families whose agreement with human reading degrades with document
//! difficulty.

use std::io;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1, LogNormal, Normal};

use crate::ingest;
use crate::model::{
    AnswerSelection, AttentionEntries, BBox, CorefAnnotation, CorefChain, Family, FixationEvent, GazeRecord, MatrixRow,
    Mention, MentionKind, ModelAttentionFile, OutcomeRecord, SpanWeight, StimulusDocument, TokenBox, WordWeight,
    MAX_ANSWER_INDEX,
};
use crate::report::InputPaths;

#[derive(Debug, Clone, PartialEq)]
pub struct SynthConfig {
    pub n_docs: usize,
    pub n_participants: usize,
    pub models_per_family: usize,
    pub min_words: usize,
    pub max_words: usize,
    /// Documents whose first XLNET model is exported as a full matrix.
    pub matrix_docs: usize,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            n_docs: 32,
            n_participants: 15,
            models_per_family: 9,
            min_words: 200,
            max_words: 250,
            matrix_docs: 1,
            seed: 0x5EED,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthCorpus {
    pub docs: Vec<StimulusDocument>,
    pub gaze: Vec<GazeRecord>,
    pub attention: Vec<ModelAttentionFile>,
    pub outcomes: Vec<OutcomeRecord>,
    pub coref: Vec<CorefAnnotation>,
    pub answers: Vec<AnswerSelection>,
}

const NAMES: [&str; 16] = [
    "Anna", "Boris", "Clara", "Dmitri", "Elena", "Felix", "Greta", "Hugo", "Ines", "Jonas", "Karla", "Lukas", "Mira",
    "Nils", "Olga", "Paul",
];
const PRONOUNS: [&str; 3] = ["she", "he", "they"];
const FUNCTION_WORDS: [&str; 13] = [
    "the", "a", "of", "and", "to", "in", "was", "that", "for", "on", "with", "at", "by",
];
const SYLLABLES: [&str; 16] = [
    "ka", "lo", "mi", "ne", "ru", "ta", "so", "vel", "dor", "an", "is", "em", "or", "ul", "tra", "pen",
];

const CHAR_W: f64 = 10.0;
const LEFT: f64 = 40.0;
const RIGHT: f64 = 1240.0;
const TOP: f64 = 40.0;
const LINE_H: f64 = 36.0;
const BOX_H: f64 = 26.0;

#[derive(Debug, Clone, Copy, PartialEq)]
enum WordKind {
    Function,
    Content,
    Name(usize),
    Pronoun(usize),
}

struct Draft {
    doc: StimulusDocument,
    kinds: Vec<WordKind>,
    salience: Vec<f64>,
}

fn round1(x: f64) -> f64 {
    (x * 10.0).round() / 10.0
}

fn pseudo_word(rng: &mut ChaCha8Rng) -> String {
    let n = rng.gen_range(1..=4);
    (0..n).map(|_| *SYLLABLES.choose(rng).unwrap()).collect()
}

fn draft_document(doc_id: &str, cfg: &SynthConfig, rng: &mut ChaCha8Rng) -> Draft {
    let target = rng.gen_range(cfg.min_words..=cfg.max_words);
    let vocab: Vec<String> = (0..60).map(|_| pseudo_word(rng)).collect();
    let mut names: Vec<usize> = (0..NAMES.len()).collect();
    names.shuffle(rng);
    let characters: Vec<(usize, usize)> = names[..3]
        .iter()
        .map(|&n| (n, rng.gen_range(0..PRONOUNS.len())))
        .collect();
    let mut introduced = [false; 3];

    let mut words: Vec<(String, WordKind, usize)> = Vec::with_capacity(target);
    let mut sentence = 0;
    while words.len() < target {
        let len = rng.gen_range(8..=18).min(target - words.len());
        for k in 0..len {
            let r: f64 = rng.gen();
            let (mut text, kind) = if r < 0.3 {
                (FUNCTION_WORDS.choose(rng).unwrap().to_string(), WordKind::Function)
            } else if r < 0.4 {
                let c = rng.gen_range(0..3);
                if introduced[c] && rng.gen_bool(0.5) {
                    (PRONOUNS[characters[c].1].to_string(), WordKind::Pronoun(c))
                } else {
                    introduced[c] = true;
                    (NAMES[characters[c].0].to_string(), WordKind::Name(c))
                }
            } else {
                // Zipf-like reuse of the document vocabulary
                let idx = ((rng.gen::<f64>().powi(2)) * vocab.len() as f64) as usize;
                (vocab[idx.min(vocab.len() - 1)].clone(), WordKind::Content)
            };
            if k == 0 {
                let mut chars = text.chars();
                if let Some(first) = chars.next() {
                    text = first.to_uppercase().chain(chars).collect();
                }
            }
            if k + 1 == len {
                text.push('.');
            }
            words.push((text, kind, sentence));
        }
        sentence += 1;
    }

    let jitter = LogNormal::new(0.0, 0.35).unwrap();
    let mut tokens = Vec::with_capacity(words.len());
    let mut kinds = Vec::with_capacity(words.len());
    let mut salience = Vec::with_capacity(words.len());
    let (mut x, mut line, mut char_pos) = (LEFT, 0usize, 0usize);
    for (id, (text, kind, sent)) in words.into_iter().enumerate() {
        let n_chars = text.chars().count();
        let w = n_chars as f64 * CHAR_W;
        if x + w > RIGHT {
            x = LEFT;
            line += 1;
        }
        let y0 = TOP + line as f64 * LINE_H;
        let base = (0.4 + 0.12 * n_chars as f64).min(1.4);
        let factor = match kind {
            WordKind::Function => 0.35,
            WordKind::Content => 1.0,
            WordKind::Name(_) => 1.8,
            WordKind::Pronoun(_) => 0.5,
        };
        salience.push(base * factor * jitter.sample(rng));
        kinds.push(kind);
        tokens.push(TokenBox {
            token_id: id,
            text,
            sentence_index: sent,
            char_start: char_pos,
            char_end: char_pos + n_chars,
            bbox: BBox::new(x, y0, x + w, y0 + BOX_H),
        });
        x += w + CHAR_W;
        char_pos += n_chars + 1;
    }
    let doc = StimulusDocument::from_tokens(doc_id, tokens).expect("generated layout is valid");
    Draft { doc, kinds, salience }
}

fn coref_for(draft: &Draft) -> CorefAnnotation {
    let mut chains: Vec<CorefChain> = (0..3)
        .map(|c| CorefChain {
            chain_id: format!("c{c}"),
            mentions: Vec::new(),
        })
        .collect();
    for (i, kind) in draft.kinds.iter().enumerate() {
        let (c, kind) = match kind {
            WordKind::Name(c) => (*c, MentionKind::Antecedent),
            WordKind::Pronoun(c) => (*c, MentionKind::Pronoun),
            _ => continue,
        };
        chains[c].mentions.push(Mention {
            token_ids: vec![i],
            kind,
        });
    }
    CorefAnnotation {
        doc_id: draft.doc.doc_id().to_string(),
        chains: chains.into_iter().filter(|c| !c.mentions.is_empty()).collect(),
    }
}

fn simulate_reader(draft: &Draft, participant: usize, rng: &mut ChaCha8Rng) -> GazeRecord {
    let tokens = draft.doc.tokens();
    let speed = rng.gen_range(0.85..1.2);
    let dur_noise = Normal::new(0.0, 25.0).unwrap();
    let x_noise = Normal::new(0.0, 4.0).unwrap();
    let y_noise = Normal::new(0.0, 5.0).unwrap();
    let label_words = participant == 0;
    let mut t = 0.0;
    let mut fixations = Vec::new();

    let mut fixate = |i: usize, rng: &mut ChaCha8Rng, fixations: &mut Vec<FixationEvent>| {
        let b = tokens[i].bbox;
        let dur = (speed * (120.0 + 90.0 * draft.salience[i]) + dur_noise.sample(rng))
            .max(50.0)
            .round();
        let r: f64 = rng.gen();
        let (x, y, word_id) = if r < 0.01 {
            (5.0, 5.0, None)
        } else if r < 0.04 {
            // drift into the gap below the line
            let x = rng.gen_range(b.x0..b.x1);
            (x, b.y1 + 5.0, None)
        } else {
            let margin = 0.2 * b.width();
            let x = rng.gen_range(b.x0 + margin..=b.x1 - margin) + x_noise.sample(rng);
            let y = 0.5 * (b.y0 + b.y1) + y_noise.sample(rng);
            (x, y, label_words.then_some(i))
        };
        fixations.push(FixationEvent {
            t_ms: t,
            x: round1(x),
            y: round1(y),
            dur_ms: dur,
            word_id,
        });
        t += dur + rng.gen_range(20..=40) as f64;
    };

    for i in 0..tokens.len() {
        let n_chars = tokens[i].text.chars().count();
        let p_skip = match draft.kinds[i] {
            WordKind::Function => 0.45,
            WordKind::Pronoun(_) => 0.35,
            _ => (0.3 - 0.04 * n_chars as f64).max(0.05),
        };
        if rng.gen_bool(p_skip) {
            continue;
        }
        fixate(i, rng, &mut fixations);
        if n_chars >= 7 && rng.gen_bool(0.15) {
            fixate(i, rng, &mut fixations);
        }
        if i > 0 && rng.gen_bool(0.08) {
            let back = rng.gen_range(i.saturating_sub(6)..i);
            fixate(back, rng, &mut fixations);
        }
    }
    GazeRecord {
        participant_id: format!("p{:02}", participant + 1),
        doc_id: draft.doc.doc_id().to_string(),
        fixations,
    }
}

/// Expected human attention: salience discounted by skipping.
fn expected_attention(draft: &Draft) -> Vec<f64> {
    let raw: Vec<f64> = draft
        .salience
        .iter()
        .zip(&draft.kinds)
        .map(|(s, k)| {
            let keep = match k {
                WordKind::Function => 0.55,
                WordKind::Pronoun(_) => 0.65,
                _ => 0.85,
            };
            keep * (120.0 + 90.0 * s)
        })
        .collect();
    let total: f64 = raw.iter().sum();
    raw.into_iter().map(|v| v / total).collect()
}

fn family_alpha(family: Family, difficulty: f64, rng: &mut ChaCha8Rng) -> f64 {
    let noise = Normal::new(0.0, 0.05).unwrap().sample(rng);
    let a = match family {
        Family::Lstm => 0.15 + 0.6 * difficulty + noise,
        Family::Cnn => 0.3 + 0.5 * difficulty + noise,
        Family::Xlnet => 0.55 + 1.6 * noise,
    };
    a.clamp(0.02, 0.95)
}

fn family_correct(family: Family, difficulty: f64, n_models: usize, rng: &mut ChaCha8Rng) -> u32 {
    let m = n_models as f64;
    let v = match family {
        Family::Lstm => m * (1.0 - difficulty) + Normal::new(0.0, 1.0).unwrap().sample(rng),
        Family::Cnn => 0.95 * m * (1.0 - difficulty) + Normal::new(0.0, 1.2).unwrap().sample(rng),
        Family::Xlnet => m * rng.gen_range(0.8..1.0),
    };
    v.round().clamp(0.0, m) as u32
}

fn mixed_weights(target: &[f64], alpha: f64, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let noise: Vec<f64> = target.iter().map(|_| Exp1.sample(rng)).collect();
    let noise_total: f64 = noise.iter().sum();
    let scale = rng.gen_range(0.5..5.0);
    target
        .iter()
        .zip(&noise)
        .map(|(h, n)| scale * ((1.0 - alpha) * h + alpha * n / noise_total))
        .collect()
}

/// Splits longer words into two subtokens sharing the word's weight.
fn subtoken_entries(doc: &StimulusDocument, words: &[f64], rng: &mut ChaCha8Rng) -> Vec<SpanWeight> {
    let mut out = Vec::with_capacity(words.len() * 2);
    for (t, &w) in doc.tokens().iter().zip(words) {
        let len = t.char_end - t.char_start;
        if len >= 6 {
            let cut = t.char_start + len / 2;
            let share = rng.gen_range(0.3..0.7);
            out.push(SpanWeight {
                char_start: t.char_start,
                char_end: cut,
                weight: w * share,
            });
            out.push(SpanWeight {
                char_start: cut,
                char_end: t.char_end,
                weight: w * (1.0 - share),
            });
        } else {
            out.push(SpanWeight {
                char_start: t.char_start,
                char_end: t.char_end,
                weight: w,
            });
        }
    }
    out
}

/// Square matrix whose row maxima are the subtoken weights.
fn matrix_entries(spans: &[SpanWeight], rng: &mut ChaCha8Rng) -> Vec<MatrixRow> {
    let n = spans.len();
    spans
        .iter()
        .enumerate()
        .map(|(i, s)| {
            let row = (0..n)
                .map(|j| {
                    if j == i {
                        s.weight
                    } else {
                        s.weight * rng.gen_range(0..8) as f64 / 8.0
                    }
                })
                .collect();
            MatrixRow {
                char_start: s.char_start,
                char_end: s.char_end,
                row,
            }
        })
        .collect()
}

impl SynthCorpus {
    pub fn generate(cfg: &SynthConfig) -> SynthCorpus {
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        let mut corpus = SynthCorpus {
            docs: Vec::new(),
            gaze: Vec::new(),
            attention: Vec::new(),
            outcomes: Vec::new(),
            coref: Vec::new(),
            answers: Vec::new(),
        };
        for d in 0..cfg.n_docs {
            let doc_id = format!("doc{:02}", d + 1);
            let draft = draft_document(&doc_id, cfg, &mut rng);
            let difficulty: f64 = rng.gen();

            for p in 0..cfg.n_participants {
                corpus.gaze.push(simulate_reader(&draft, p, &mut rng));
            }

            let target = expected_attention(&draft);
            for family in Family::ALL {
                for m in 0..cfg.models_per_family {
                    let alpha = family_alpha(family, difficulty, &mut rng);
                    let words = mixed_weights(&target, alpha, &mut rng);
                    let entries = match family {
                        Family::Xlnet => {
                            let spans = subtoken_entries(&draft.doc, &words, &mut rng);
                            if m == 0 && d < cfg.matrix_docs {
                                AttentionEntries::Matrix(matrix_entries(&spans, &mut rng))
                            } else {
                                AttentionEntries::Subtoken(spans)
                            }
                        }
                        _ => AttentionEntries::Word(
                            words
                                .iter()
                                .enumerate()
                                .map(|(token_id, &weight)| WordWeight { token_id, weight })
                                .collect(),
                        ),
                    };
                    corpus.attention.push(ModelAttentionFile {
                        model_id: format!("{}-{}", family.as_str().to_lowercase(), m),
                        family,
                        doc_id: doc_id.clone(),
                        entries,
                    });
                }
                corpus.outcomes.push(OutcomeRecord {
                    doc_id: doc_id.clone(),
                    family,
                    n_correct: family_correct(family, difficulty, cfg.models_per_family, &mut rng),
                    n_models: cfg.models_per_family as u32,
                });
            }

            let correct = rng.gen_range(0..=MAX_ANSWER_INDEX);
            let group = if d < cfg.n_docs.div_ceil(2) { "study1" } else { "study2" };
            for p in 0..cfg.n_participants {
                let selected = if rng.gen_bool(0.9) {
                    correct
                } else {
                    let other = rng.gen_range(0..MAX_ANSWER_INDEX);
                    if other >= correct {
                        other + 1
                    } else {
                        other
                    }
                };
                corpus.answers.push(AnswerSelection {
                    participant_id: format!("p{:02}", p + 1),
                    doc_id: doc_id.clone(),
                    selected,
                    correct,
                    group: group.to_string(),
                });
            }

            corpus.coref.push(coref_for(&draft));
            corpus.docs.push(draft.doc);
        }
        corpus
    }

    /// Writes every input file under `dir` and returns their paths.
    pub fn write(&self, dir: &Path) -> io::Result<InputPaths> {
        let stimuli = dir.join("stimuli");
        std::fs::create_dir_all(&stimuli)?;
        for doc in &self.docs {
            std::fs::write(
                stimuli.join(format!("{}.tsv", doc.doc_id())),
                ingest::write_stimulus(doc),
            )?;
        }
        let paths = InputPaths {
            stimuli: Some(stimuli),
            gaze: Some(dir.join("gaze.tsv")),
            attention: Some(dir.join("attention.jsonl")),
            outcomes: Some(dir.join("outcomes.csv")),
            coref: Some(dir.join("coref.jsonl")),
            answers: Some(dir.join("answers.csv")),
        };
        let write = |p: &Option<std::path::PathBuf>, s: String| std::fs::write(p.as_ref().unwrap(), s);
        write(&paths.gaze, ingest::write_gaze(&self.gaze))?;
        write(&paths.attention, ingest::write_model_attention(&self.attention))?;
        write(&paths.outcomes, ingest::write_outcomes(&self.outcomes))?;
        write(&paths.coref, ingest::write_coref(&self.coref))?;
        write(&paths.answers, ingest::write_answers(&self.answers))?;
        Ok(paths)
    }
}
