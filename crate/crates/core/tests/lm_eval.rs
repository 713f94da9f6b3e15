//! Phoneme LM and PER scoring against hand counts and brute force.

mod common;

use std::collections::BTreeMap;

use common::*;
use rcnn_core::ctc::{Alphabet, Hypothesis};
use rcnn_core::eval::{damerau_levenshtein, per, EvalError};
use rcnn_core::lm::{rectify, rescore, Direction, LmConfig, LmError, NgramModel, ORDERS};

fn model(corpus: &[Vec<usize>], n: usize) -> NgramModel {
    NgramModel::train(corpus, &Alphabet::synthetic(n), LmConfig::default()).unwrap()
}

/// `P(v | ctx)` straight from the definition, counting n-grams in the padded
/// sentences with a sliding window.
fn oracle_conditional(corpus: &[Vec<usize>], n_sym: usize, order: usize, ctx: &[usize], v: usize) -> f64 {
    let (end, start) = (n_sym + 1, n_sym + 2);
    let (mut hits, mut total) = (0.0, 0.0);
    for s in corpus {
        let mut padded = vec![start; 3];
        padded.extend(s);
        padded.push(end);
        for w in padded.windows(order) {
            if w[..order - 1] == *ctx && w[order - 1] != start {
                total += 1.0;
                if w[order - 1] == v {
                    hits += 1.0;
                }
            }
        }
    }
    let vocab = (n_sym + 2) as f64;
    (hits + 1.0) / (total + vocab)
}

#[test]
fn conditionals_match_sliding_window_counts() {
    let corpus = vec![vec![0, 1, 2, 1], vec![2, 2, 0], vec![1], vec![0, 1, 2, 0, 1]];
    let m = model(&corpus, 3);
    let tokens: Vec<usize> = (0..5).collect();
    for order in ORDERS {
        for ctx in m.contexts(Direction::Forward, order) {
            for &v in &tokens[..m.vocab_size()] {
                let got = m.conditional(Direction::Forward, order, &ctx, v);
                let want = oracle_conditional(&corpus, 3, order, &ctx, v);
                assert!((got - want).abs() < 1e-15, "N={order} ctx={ctx:?} v={v}");
            }
        }
    }
}

#[test]
fn hand_counted_bigram_and_sentence_score() {
    let m = model(&[vec![0, 1]], 2);
    assert_eq!(m.vocab_size(), 4);
    let s = m.start();
    assert!((m.conditional(Direction::Forward, 2, &[s], 0) - 2.0 / 5.0).abs() < 1e-15);
    assert!((m.conditional(Direction::Forward, 2, &[s], 1) - 1.0 / 5.0).abs() < 1e-15);
    // Unseen context falls back to uniform 1/V.
    assert!((m.conditional(Direction::Forward, 2, &[1, 1], 0) - 0.25).abs() < 1e-15);

    // Every order sees each context of the single sentence once, so each
    // interpolated step is 0.4 + ... = 2/5 for seen and 1/5 otherwise.
    let fwd = m.direction_log_prob(Direction::Forward, &[0, 1]);
    assert!((fwd - 3.0 * (2.0f64 / 5.0).ln()).abs() < 1e-12);
    let bwd = m.direction_log_prob(Direction::Backward, &[0, 1]);
    assert!((bwd - fwd).abs() < 1e-12);
    assert!((m.score(&[0, 1]) - fwd).abs() < 1e-12);
    assert!(m.score(&[1, 0]) < m.score(&[0, 1]));
}

#[test]
fn mu_selects_a_direction() {
    let corpus = vec![vec![0, 1, 1], vec![0, 2]];
    let base = model(&corpus, 3);
    let fwd = base
        .with_config(LmConfig {
            mu: 1.0,
            ..LmConfig::default()
        })
        .unwrap();
    let bwd = base
        .with_config(LmConfig {
            mu: 0.0,
            ..LmConfig::default()
        })
        .unwrap();
    let seq = [2, 1, 0];
    assert_eq!(fwd.score(&seq), base.direction_log_prob(Direction::Forward, &seq));
    assert_eq!(bwd.score(&seq), base.direction_log_prob(Direction::Backward, &seq));
}

#[test]
fn out_of_vocabulary_indices_score_as_unknown() {
    let m = model(&[vec![0, 1]], 2);
    assert_eq!(m.score(&[0, 7]), m.score(&[0, 9]));
    assert!(m.score(&[0, 7]).is_finite());
}

#[test]
fn training_errors() {
    let a = Alphabet::synthetic(2);
    assert!(matches!(
        NgramModel::train(&[vec![]], &a, LmConfig::default()),
        Err(LmError::EmptyCorpus)
    ));
    let bad = LmConfig {
        weights: [0.5, 0.5, 0.5],
        ..LmConfig::default()
    };
    assert!(matches!(
        NgramModel::train(&[vec![0]], &a, bad),
        Err(LmError::Config(_))
    ));
    let reserved = Alphabet::new(&["a", "<s>"]).unwrap();
    assert!(matches!(
        NgramModel::train(&[vec![0]], &reserved, LmConfig::default()),
        Err(LmError::ReservedSymbol(_))
    ));
    let m = model(&[vec![0]], 2);
    assert!(matches!(rectify(&m, &[], 0.3), Err(LmError::EmptyHypotheses)));
}

#[test]
fn rescoring_can_overturn_a_close_acoustic_call() {
    let m = model(&vec![vec![0, 1, 2]; 20], 3);
    let hyp = |labels: Vec<usize>, ctc: f64| Hypothesis {
        labels,
        score: ctc,
        ctc_log_score: ctc,
        lm_log_score: 0.0,
    };
    let hyps = vec![hyp(vec![2, 1, 0], -1.0), hyp(vec![0, 1, 2], -1.2)];
    assert_eq!(rectify(&m, &hyps, 0.0).unwrap(), vec![2, 1, 0]);
    assert_eq!(rectify(&m, &hyps, 1.0).unwrap(), vec![0, 1, 2]);
    let ranked = rescore(&m, &hyps, 1.0);
    assert!((ranked[0].1 - (-1.2 + m.score(&[0, 1, 2]))).abs() < 1e-12);
}

#[test]
fn lm_file_round_trip_preserves_scores() {
    let dir = tempfile::tempdir().unwrap();
    let m = model(&[vec![0, 1, 2, 1], vec![2, 0]], 3);
    let path = dir.path().join("lm.txt");
    m.save(&path).unwrap();
    let back = NgramModel::load(&path).unwrap();
    assert_eq!(back, m);
    assert_eq!(back.score(&[1, 2, 0]), m.score(&[1, 2, 0]));
}

#[test]
fn distance_matches_brute_force_on_longer_random_strings() {
    let mut rng = rcnn_core::numerics::Rng::new(21);
    for _ in 0..300 {
        let a: Vec<u8> = (0..rng.range_inclusive(0, 6)).map(|_| rng.below(3) as u8).collect();
        let b: Vec<u8> = (0..rng.range_inclusive(0, 6)).map(|_| rng.below(3) as u8).collect();
        assert_eq!(damerau_levenshtein(&a, &b), osa_brute_force(&a, &b), "{a:?} {b:?}");
    }
}

#[test]
fn per_report_example() {
    let map = |items: &[(&str, &[u8])]| -> BTreeMap<String, Vec<u8>> {
        items.iter().map(|(k, v)| (k.to_string(), v.to_vec())).collect()
    };
    let refs = map(&[("u1", b"abc"), ("u2", b"abc")]);
    let hyps = map(&[("u1", b"abc"), ("u2", b"axc")]);
    let report = per(&refs, &hyps).unwrap();
    assert!((report.aggregate() - 1.0 / 6.0).abs() < 1e-15);
    let hyps = map(&[("u1", b"acb"), ("u2", b"abc")]);
    // One transposition in six symbols.
    assert!((per(&refs, &hyps).unwrap().aggregate() - 1.0 / 6.0).abs() < 1e-15);
    let refs = map(&[("u1", b"abc")]);
    assert!((per(&refs, &map(&[("u1", b"ab")])).unwrap().aggregate() - 1.0 / 3.0).abs() < 1e-15);
    assert_eq!(per(&refs, &map(&[("u1", b"")])).unwrap().aggregate(), 1.0);
    assert_eq!(
        per(&refs, &map(&[("u1", b""), ("u2", b"")])).unwrap_err(),
        EvalError::UnknownUtterance("u2".into())
    );
    assert_eq!(
        per(&refs, &map(&[])).unwrap_err(),
        EvalError::MissingHypothesis("u1".into())
    );
    assert_eq!(
        per(&refs, &map(&[("u1", b"b")])).unwrap().to_csv(),
        "utt_id,distance,ref_len,per\nu1,2,3,0.6666666666666666\nALL,2,3,0.6666666666666666\n"
    );
}
