use std::collections::BTreeMap;

use proptest::prelude::*;

use gazeattn::attention::{ensemble_average, entropy};
use gazeattn::gaze::{hit_test, HitIndex};
use gazeattn::ingest;
use gazeattn::model::{
    AnswerSelection, AttentionDistribution, BBox, Family, FixationEvent, GazeRecord, OutcomeRecord, Source,
    StimulusDocument, TokenBox,
};
use gazeattn::stats::{
    average_ranks, kl_divergence, participant_accuracy, percent_agreement, spearman, tukey_pairwise,
};

fn dist(w: Vec<f64>) -> AttentionDistribution {
    AttentionDistribution::from_masses("d", Source::HumanAverage, &w).unwrap()
}

fn masses(n: std::ops::Range<usize>) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(prop_oneof![Just(0.0), 1e-6..10.0f64], n)
        .prop_filter("needs positive mass", |v| v.iter().any(|x| *x > 0.0))
}

fn pair(n: std::ops::Range<usize>) -> impl Strategy<Value = (Vec<f64>, Vec<f64>)> {
    n.prop_flat_map(|n| (masses(n..n + 1), masses(n..n + 1)))
}

fn row_layout() -> impl Strategy<Value = Vec<TokenBox>> {
    prop::collection::vec((1.0..60.0f64, 0.0..8.0f64), 1..40).prop_map(|cells| {
        let mut x = 0.0;
        cells
            .into_iter()
            .enumerate()
            .map(|(i, (w, gap))| {
                let b = BBox::new(
                    x,
                    10.0 * (i / 8) as f64 * 3.0,
                    x + w,
                    10.0 * (i / 8) as f64 * 3.0 + 20.0,
                );
                x = if i % 8 == 7 { 0.0 } else { x + w + gap };
                TokenBox {
                    token_id: i,
                    text: "w".into(),
                    sentence_index: 0,
                    char_start: 2 * i,
                    char_end: 2 * i + 1,
                    bbox: b,
                }
            })
            .collect()
    })
}

fn selections() -> impl Strategy<Value = Vec<AnswerSelection>> {
    prop::collection::vec(prop::collection::vec((0u8..5, 0u8..5), 2..8), 1..6).prop_map(|docs| {
        docs.into_iter()
            .enumerate()
            .flat_map(|(d, answers)| {
                answers
                    .into_iter()
                    .enumerate()
                    .map(move |(p, (selected, correct))| AnswerSelection {
                        participant_id: format!("p{p}"),
                        doc_id: format!("d{d}"),
                        selected,
                        correct,
                        group: String::new(),
                    })
            })
            .collect()
    })
}

proptest! {
    #[test]
    fn kl_is_non_negative_and_zero_on_self((h, m) in pair(2..60), eps in prop_oneof![Just(1e-8), 1e-6..1e-2f64]) {
        let (h, m) = (dist(h), dist(m));
        let kl = kl_divergence(&h, &m, eps).unwrap();
        prop_assert!(kl >= 0.0 && kl.is_finite());
        prop_assert_eq!(kl_divergence(&h, &h, eps).unwrap(), 0.0);
    }

    #[test]
    fn kl_converges_as_smoothing_vanishes(h in prop::collection::vec(0.01..1.0f64, 2..40), m in prop::collection::vec(0.01..1.0f64, 40)) {
        let m = m[..h.len()].to_vec();
        let (h, m) = (dist(h), dist(m));
        let exact = kl_divergence(&h, &m, 0.0).unwrap();
        let gaps: Vec<f64> = [1e-2, 1e-4, 1e-6, 1e-8]
            .iter()
            .map(|e| (kl_divergence(&h, &m, *e).unwrap() - exact).abs())
            .collect();
        prop_assert!(gaps.windows(2).all(|w| w[1] <= w[0] + 1e-15), "{:?}", gaps);
        prop_assert!(gaps[3] <= 1e-4 * gaps[0] + 1e-13, "{:?}", gaps);
    }

    #[test]
    fn normalization_is_scale_invariant(w in masses(1..50), scale in 1e-3..1e3f64) {
        let a = dist(w.clone());
        let b = dist(w.iter().map(|x| x * scale).collect());
        for (x, y) in a.weights().iter().zip(b.weights()) {
            prop_assert!((x - y).abs() < 1e-12);
        }
        prop_assert!((a.weights().iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn entropy_is_bounded(w in masses(1..100)) {
        let d = dist(w);
        let h = entropy(&d);
        prop_assert!(h >= 0.0 && h <= (d.len() as f64).ln() + 1e-12);
    }

    #[test]
    fn ensemble_of_identical_models_is_that_model(w in masses(1..40), k in 1usize..6) {
        let d = AttentionDistribution::from_masses("d", Source::Model("m".into()), &w).unwrap();
        let avg = ensemble_average(&vec![d.clone(); k], Family::Cnn).unwrap();
        for (x, y) in avg.weights().iter().zip(d.weights()) {
            prop_assert!((x - y).abs() < 1e-15);
        }
    }

    #[test]
    fn hit_index_matches_linear_scan(tokens in row_layout(), pts in prop::collection::vec((-20.0..520.0f64, -10.0..150.0f64), 50), snap in prop_oneof![Just(0.0), 0.5..30.0f64]) {
        let index = HitIndex::new(&tokens);
        for (x, y) in pts {
            let fix = FixationEvent { t_ms: 0.0, x, y, dur_ms: 1.0, word_id: None };
            let want = {
                let inside = tokens.iter().filter(|t| t.bbox.contains(x, y)).map(|t| t.token_id).min();
                inside.or_else(|| {
                    (snap > 0.0).then(|| tokens
                        .iter()
                        .map(|t| (t.bbox.distance(x, y), t.token_id))
                        .filter(|(d, _)| *d <= snap)
                        .min_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)))
                        .map(|p| p.1)).flatten()
                })
            };
            prop_assert_eq!(index.hit(x, y, snap), want);
            prop_assert_eq!(hit_test(&fix, &tokens, snap), want);
        }
    }

    #[test]
    fn spearman_ignores_monotone_transforms(x in prop::collection::vec(-5.0..5.0f64, 3..40), seed in any::<u64>()) {
        let y: Vec<f64> = x.iter().enumerate().map(|(i, v)| ((i as u64 ^ seed) % 7) as f64 + v * 0.1).collect();
        prop_assume!(x.iter().any(|v| *v != x[0]) && y.iter().any(|v| *v != y[0]));
        let base = spearman(&x, &y).unwrap().rho;
        let tx: Vec<f64> = x.iter().map(|v| v.exp() * 3.0 - 1.0).collect();
        let ty: Vec<f64> = y.iter().map(|v| v.powi(3)).collect();
        prop_assert!((spearman(&tx, &ty).unwrap().rho - base).abs() < 1e-12);
        let neg: Vec<f64> = y.iter().map(|v| -v).collect();
        prop_assert!((spearman(&x, &neg).unwrap().rho + base).abs() < 1e-12);
    }

    #[test]
    fn ranks_sum_to_triangular_number(x in prop::collection::vec(0u8..6, 1..60)) {
        let v: Vec<f64> = x.iter().map(|a| *a as f64).collect();
        let n = v.len() as f64;
        prop_assert!((average_ranks(&v).iter().sum::<f64>() - n * (n + 1.0) / 2.0).abs() < 1e-9);
    }

    #[test]
    fn tukey_contrasts_are_antisymmetric(a in prop::collection::vec(0.0..1.0f64, 2..15), b in prop::collection::vec(0.0..1.0f64, 2..15), c in prop::collection::vec(0.0..1.0f64, 2..15)) {
        let fwd: BTreeMap<String, Vec<f64>> = [("A", &a), ("B", &b), ("C", &c)].iter().map(|(k, v)| (k.to_string(), v.to_vec())).collect();
        let rev: BTreeMap<String, Vec<f64>> = [("A", &c), ("B", &b), ("C", &a)].iter().map(|(k, v)| (k.to_string(), v.to_vec())).collect();
        let f = tukey_pairwise(&fwd).unwrap();
        let r = tukey_pairwise(&rev).unwrap();
        // A-C forward is the negation of A-C after swapping the A and C data
        prop_assert!((f[1].estimate + r[1].estimate).abs() < 1e-12);
        prop_assert!((f[1].p_adj - r[1].p_adj).abs() < 1e-9);
        for x in &f {
            prop_assert!((0.0..=1.0).contains(&x.p_adj));
        }
    }

    #[test]
    fn agreement_ignores_order(s in selections(), seed in any::<u64>()) {
        let mut shuffled = s.clone();
        let n = shuffled.len();
        for i in (1..n).rev() {
            let j = (seed.wrapping_mul(6364136223846793005).wrapping_add(i as u64) >> 33) as usize % (i + 1);
            shuffled.swap(i, j);
        }
        prop_assert!((percent_agreement(&s).unwrap() - percent_agreement(&shuffled).unwrap()).abs() < 1e-12);
        prop_assert_eq!(participant_accuracy(&s).unwrap(), participant_accuracy(&shuffled).unwrap());
    }

    #[test]
    fn gaze_round_trips(fix in prop::collection::vec((0.0..1e5f64, -100.0..2000.0f64, -100.0..2000.0f64, 1.0..2000.0f64, prop::option::of(0usize..300)), 1..40)) {
        let rec = GazeRecord {
            participant_id: "p1".into(),
            doc_id: "d".into(),
            fixations: fix.into_iter().map(|(t_ms, x, y, dur_ms, word_id)| FixationEvent { t_ms, x, y, dur_ms, word_id }).collect(),
        };
        let text = ingest::write_gaze(std::slice::from_ref(&rec));
        let back = ingest::parse_gaze_str(&text).unwrap();
        prop_assert_eq!(back.len(), 1);
        prop_assert_eq!(&back[0].participant_id, &rec.participant_id);
        // parser sorts by time
        let mut sorted = rec.fixations.clone();
        sorted.sort_by(|a, b| a.t_ms.total_cmp(&b.t_ms));
        prop_assert_eq!(&back[0].fixations, &sorted);
    }

    #[test]
    fn stimulus_round_trips(words in prop::collection::vec("[a-zA-Z]{1,9}[.,]?", 1..60)) {
        let mut tokens = Vec::new();
        let mut pos = 0;
        for (i, w) in words.iter().enumerate() {
            let x = (i % 10) as f64 * 80.0;
            let y = (i / 10) as f64 * 30.0;
            tokens.push(TokenBox {
                token_id: i,
                text: w.clone(),
                sentence_index: i / 7,
                char_start: pos,
                char_end: pos + w.len(),
                bbox: BBox::new(x, y, x + 8.0 * w.len() as f64, y + 20.0),
            });
            pos += w.len() + 1;
        }
        let doc = StimulusDocument::from_tokens("doc", tokens).unwrap();
        let back = ingest::parse_stimulus_str("doc", &ingest::write_stimulus(&doc), None).unwrap();
        prop_assert_eq!(back.tokens(), doc.tokens());
        prop_assert_eq!(back.plain_text(), doc.plain_text());
    }

    #[test]
    fn outcomes_round_trip(rows in prop::collection::vec((0u32..10, 0usize..3), 1..20)) {
        let recs: Vec<OutcomeRecord> = rows
            .into_iter()
            .enumerate()
            .map(|(i, (n_correct, f))| OutcomeRecord { doc_id: format!("d{i}"), family: Family::ALL[f], n_correct, n_models: 9 })
            .collect();
        prop_assert_eq!(ingest::parse_outcomes_str(&ingest::write_outcomes(&recs)).unwrap(), recs);
    }
}
