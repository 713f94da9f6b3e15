use std::collections::BTreeMap;

use super::{LmConfig, LmError, END, START, UNKNOWN};
use crate::ctc::{Alphabet, Hypothesis, PhonemeSequence, PrefixScorer};

/// N-gram orders kept by the model.
pub const ORDERS: [usize; 3] = [2, 3, 4];
const MAX_CONTEXT: usize = 3;

/// Token ids: alphabet symbols `0..n`, then `<unk>` = n, `</s>` = n+1 and
/// `<s>` = n+2. Only the first `n + 2` are ever predicted.
pub type Token = usize;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Direction {
    Forward,
    Backward,
}

impl Direction {
    pub fn tag(self) -> &'static str {
        match self {
            Direction::Forward => "f",
            Direction::Backward => "b",
        }
    }

    fn slot(self) -> usize {
        self as usize
    }
}

/// Continuation counts of one context.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub(super) struct ContextCounts {
    pub(super) next: BTreeMap<Token, u64>,
    pub(super) total: u64,
}

pub(super) type Table = BTreeMap<Vec<Token>, ContextCounts>;

#[derive(Clone, Debug, PartialEq)]
pub struct NgramModel {
    pub(super) symbols: Vec<String>,
    pub(super) config: LmConfig,
    /// `[direction][order - 2]`.
    pub(super) tables: [[Table; 3]; 2],
}

impl NgramModel {
    /// Counts forward and backward n-grams over `corpus`. Empty sentences are
    /// skipped with a warning; indices outside the alphabet count as `<unk>`.
    pub fn train(corpus: &[PhonemeSequence], alphabet: &Alphabet, config: LmConfig) -> Result<Self, LmError> {
        config.validate()?;
        if let Some(s) = alphabet
            .symbols()
            .iter()
            .find(|s| [START, END, UNKNOWN].contains(&s.as_str()))
        {
            return Err(LmError::ReservedSymbol(s.clone()));
        }
        let mut model = NgramModel {
            symbols: alphabet.symbols().to_vec(),
            config,
            tables: Default::default(),
        };
        let mut used = 0;
        for (i, sentence) in corpus.iter().enumerate() {
            if sentence.is_empty() {
                log::warn!("LM training: sentence {i} is empty, skipped");
                continue;
            }
            used += 1;
            let seq = model.map_unknown(sentence);
            model.count(Direction::Forward, &seq);
            let rev: Vec<Token> = seq.iter().rev().copied().collect();
            model.count(Direction::Backward, &rev);
        }
        if used == 0 {
            return Err(LmError::EmptyCorpus);
        }
        Ok(model)
    }

    fn count(&mut self, dir: Direction, seq: &[Token]) {
        let padded = self.pad(seq);
        for i in MAX_CONTEXT..padded.len() {
            let v = padded[i];
            for (slot, n) in ORDERS.iter().enumerate() {
                let ctx = padded[i + 1 - n..i].to_vec();
                let entry = self.tables[dir.slot()][slot].entry(ctx).or_default();
                *entry.next.entry(v).or_insert(0) += 1;
                entry.total += 1;
            }
        }
    }

    fn pad(&self, seq: &[Token]) -> Vec<Token> {
        let mut padded = vec![self.start(); MAX_CONTEXT];
        padded.extend_from_slice(seq);
        padded.push(self.end());
        padded
    }

    fn map_unknown(&self, seq: &[usize]) -> Vec<Token> {
        seq.iter()
            .map(|&s| {
                if s < self.symbols.len() {
                    s
                } else {
                    log::warn!("LM: symbol index {s} outside the vocabulary, scored as {UNKNOWN}");
                    self.unknown()
                }
            })
            .collect()
    }

    pub fn config(&self) -> &LmConfig {
        &self.config
    }

    /// Returns a copy using different smoothing, weights or mix.
    pub fn with_config(&self, config: LmConfig) -> Result<Self, LmError> {
        config.validate()?;
        Ok(NgramModel { config, ..self.clone() })
    }

    pub fn symbols(&self) -> &[String] {
        &self.symbols
    }

    pub fn unknown(&self) -> Token {
        self.symbols.len()
    }

    pub fn end(&self) -> Token {
        self.symbols.len() + 1
    }

    pub fn start(&self) -> Token {
        self.symbols.len() + 2
    }

    /// Size `V` of the predicted vocabulary: symbols, `<unk>` and `</s>`.
    pub fn vocab_size(&self) -> usize {
        self.symbols.len() + 2
    }

    pub fn token_name(&self, t: Token) -> &str {
        match t {
            t if t < self.symbols.len() => &self.symbols[t],
            t if t == self.unknown() => UNKNOWN,
            t if t == self.end() => END,
            _ => START,
        }
    }

    /// Raw count table for one direction and order (2–4).
    pub fn table(&self, dir: Direction, order: usize) -> BTreeMap<Vec<Token>, BTreeMap<Token, u64>> {
        self.tables[dir.slot()][order - 2]
            .iter()
            .map(|(k, v)| (k.clone(), v.next.clone()))
            .collect()
    }

    /// Every context seen in training for one direction and order.
    pub fn contexts(&self, dir: Direction, order: usize) -> Vec<Vec<Token>> {
        self.tables[dir.slot()][order - 2].keys().cloned().collect()
    }

    /// Smoothed `P_N(v | context) = (c(context, v) + k) / (c(context) + k·V)`,
    /// where `context` holds the last `N − 1` tokens.
    pub fn conditional(&self, dir: Direction, order: usize, context: &[Token], v: Token) -> f64 {
        let k = self.config.smoothing;
        let vsize = self.vocab_size() as f64;
        let (c, total) = match self.tables[dir.slot()][order - 2].get(context) {
            Some(cc) => (cc.next.get(&v).copied().unwrap_or(0), cc.total),
            None => (0, 0),
        };
        (c as f64 + k) / (total as f64 + k * vsize)
    }

    /// Interpolated `Σ_N w_N · P_N(v | last N−1 tokens of history)`. The
    /// history must already carry the start padding.
    pub fn interpolated(&self, dir: Direction, history: &[Token], v: Token) -> f64 {
        ORDERS
            .iter()
            .zip(&self.config.weights)
            .map(|(&n, &w)| {
                let ctx = &history[history.len() + 1 - n..];
                w * self.conditional(dir, n, ctx, v)
            })
            .sum()
    }

    /// `Σ log P` over every symbol of `seq` and the closing `</s>`, in one
    /// direction (the backward direction reads `seq` reversed).
    pub fn direction_log_prob(&self, dir: Direction, seq: &[usize]) -> f64 {
        let mut seq = self.map_unknown(seq);
        if dir == Direction::Backward {
            seq.reverse();
        }
        let padded = self.pad(&seq);
        (MAX_CONTEXT..padded.len())
            .map(|i| self.interpolated(dir, &padded[..i], padded[i]).ln())
            .sum()
    }

    /// `mu · forward + (1 − mu) · backward` log score.
    pub fn score(&self, seq: &[usize]) -> f64 {
        let mu = self.config.mu;
        let f = if mu > 0.0 {
            self.direction_log_prob(Direction::Forward, seq)
        } else {
            0.0
        };
        let b = if mu < 1.0 {
            self.direction_log_prob(Direction::Backward, seq)
        } else {
            0.0
        };
        mu * f + (1.0 - mu) * b
    }
}

/// During beam search only the left context exists, so fusion uses the
/// forward interpolated model; the backward direction enters at rescoring.
impl PrefixScorer for NgramModel {
    fn extension_log_prob(&self, prefix: &[usize], next: usize) -> f64 {
        let mut history = vec![self.start(); MAX_CONTEXT];
        history.extend(self.map_unknown(prefix));
        let v = self.map_unknown(&[next])[0];
        self.interpolated(Direction::Forward, &history, v).ln()
    }
}

/// Hypotheses re-ranked by `ctc_log_score + lambda · score(labels)`: returns
/// `(index, fused score)` best first. Ties go to the higher CTC score, then to
/// the earlier hypothesis.
pub fn rescore(model: &NgramModel, hyps: &[Hypothesis], lambda: f64) -> Vec<(usize, f64)> {
    let mut ranked: Vec<(usize, f64)> = hyps
        .iter()
        .enumerate()
        .map(|(i, h)| {
            let lm = if lambda == 0.0 {
                0.0
            } else {
                lambda * model.score(&h.labels)
            };
            (i, h.ctc_log_score + lm)
        })
        .collect();
    ranked.sort_by(|a, b| {
        b.1.total_cmp(&a.1)
            .then_with(|| hyps[b.0].ctc_log_score.total_cmp(&hyps[a.0].ctc_log_score))
            .then_with(|| a.0.cmp(&b.0))
    });
    ranked
}

/// Best hypothesis after LM rescoring.
pub fn rectify(model: &NgramModel, hyps: &[Hypothesis], lambda: f64) -> Result<PhonemeSequence, LmError> {
    let best = rescore(model, hyps, lambda)
        .first()
        .map(|&(i, _)| i)
        .ok_or(LmError::EmptyHypotheses)?;
    Ok(hyps[best].labels.clone())
}
