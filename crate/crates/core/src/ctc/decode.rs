use std::collections::HashMap;

use crate::numerics::{Scalar, Tensor};

use super::{Alphabet, CtcError, PhonemeSequence};

/// Collapsing map: merge repeated neighbours, then drop blanks.
pub fn collapse(path: &[usize], blank: usize) -> PhonemeSequence {
    let mut out = Vec::new();
    let mut prev = None;
    for &c in path {
        if Some(c) != prev && c != blank {
            out.push(c);
        }
        prev = Some(c);
    }
    out
}

/// Best-path decoding. Ties in a frame go to the lowest label index.
///
/// Returns the collapsed labelling and the log probability of the best path.
pub fn greedy_decode<T: Scalar>(y: &Tensor<T>, blank: usize) -> Result<(PhonemeSequence, f64), CtcError> {
    let (frames, _) = y.dims2()?;
    let mut path = Vec::with_capacity(frames);
    let mut score = 0.0;
    for t in 0..frames {
        let (best, p) = y.row(t).iter().enumerate().fold(
            (0, T::neg_infinity()),
            |acc, (i, &v)| if v > acc.1 { (i, v) } else { acc },
        );
        path.push(best);
        score += p.to_f64_lossy().ln();
    }
    Ok((collapse(&path, blank), score))
}

/// Left-to-right label scorer used for shallow fusion during beam search.
pub trait PrefixScorer {
    /// Log probability of appending `next` to `prefix`.
    fn extension_log_prob(&self, prefix: &[usize], next: usize) -> f64;
}

#[derive(Clone, Debug, PartialEq)]
pub struct Hypothesis {
    pub labels: PhonemeSequence,
    /// Fused score: `ctc_log_score + lambda · lm_log_score`.
    pub score: f64,
    /// `ln p(l|x)` accumulated over the prefix lattice.
    pub ctc_log_score: f64,
    pub lm_log_score: f64,
}

fn log_add(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY {
        return b;
    }
    if b == f64::NEG_INFINITY {
        return a;
    }
    let (hi, lo) = if a > b { (a, b) } else { (b, a) };
    hi + (lo - hi).exp().ln_1p()
}

#[derive(Clone, Copy)]
struct Mass {
    blank: f64,
    non_blank: f64,
}

impl Mass {
    const ZERO: Mass = Mass {
        blank: f64::NEG_INFINITY,
        non_blank: f64::NEG_INFINITY,
    };

    fn total(self) -> f64 {
        log_add(self.blank, self.non_blank)
    }
}

/// Prefix beam search over a `T × K` probability matrix.
///
/// Each prefix keeps separate log masses for paths ending in blank and in its
/// last symbol. When `lm` is given, every symbol extension adds
/// `lambda · lm.extension_log_prob`. With a width at least as large as the
/// number of reachable prefixes the search is exact. Results are sorted by
/// fused score, ties by label sequence.
pub fn beam_decode<T: Scalar>(
    y: &Tensor<T>,
    blank: usize,
    width: usize,
    lm: Option<&dyn PrefixScorer>,
    lambda: f64,
) -> Result<Vec<Hypothesis>, CtcError> {
    if width < 1 {
        return Err(CtcError::BeamWidth(width));
    }
    let (frames, k) = y.dims2()?;
    if blank >= k {
        return Err(CtcError::BlankOutOfRange { blank, num_labels: k });
    }
    let mut lm_cache: HashMap<PhonemeSequence, f64> = HashMap::new();
    lm_cache.insert(Vec::new(), 0.0);
    let mut beams: Vec<(PhonemeSequence, Mass)> = vec![(
        Vec::new(),
        Mass {
            blank: 0.0,
            non_blank: f64::NEG_INFINITY,
        },
    )];

    for t in 0..frames {
        let logp: Vec<f64> = y.row(t).iter().map(|v| v.to_f64_lossy().ln()).collect();
        let mut next: HashMap<PhonemeSequence, Mass> = HashMap::new();
        for (prefix, mass) in &beams {
            let total = mass.total();
            let e = next.entry(prefix.clone()).or_insert(Mass::ZERO);
            e.blank = log_add(e.blank, total + logp[blank]);
            let last = prefix.last().copied();
            if let Some(c) = last {
                // Repeat of the last symbol without an intervening blank.
                e.non_blank = log_add(e.non_blank, mass.non_blank + logp[c]);
            }
            for c in (0..k).filter(|&c| c != blank) {
                if logp[c] == f64::NEG_INFINITY {
                    continue;
                }
                let mut extended = prefix.clone();
                extended.push(c);
                let fuse = match lm {
                    Some(scorer) if lambda != 0.0 => {
                        let ext = scorer.extension_log_prob(prefix, c);
                        let base = lm_cache[prefix];
                        lm_cache.entry(extended.clone()).or_insert(base + ext);
                        lambda * ext
                    }
                    _ => 0.0,
                };
                let from = if Some(c) == last { mass.blank } else { total };
                let e = next.entry(extended).or_insert(Mass::ZERO);
                e.non_blank = log_add(e.non_blank, from + logp[c] + fuse);
            }
        }
        let mut ranked: Vec<(PhonemeSequence, Mass)> = next.into_iter().collect();
        ranked.sort_by(|a, b| {
            b.1.total()
                .partial_cmp(&a.1.total())
                .unwrap_or(std::cmp::Ordering::Equal)
                .then_with(|| a.0.cmp(&b.0))
        });
        ranked.retain(|(_, m)| m.total() > f64::NEG_INFINITY);
        ranked.truncate(width);
        beams = ranked;
    }

    let use_lm = lm.is_some() && lambda != 0.0;
    Ok(beams
        .into_iter()
        .map(|(labels, mass)| {
            let score = mass.total();
            let lm_log_score = if use_lm {
                lm_cache.get(&labels).copied().unwrap_or(0.0)
            } else {
                0.0
            };
            Hypothesis {
                ctc_log_score: score - lambda * lm_log_score,
                lm_log_score,
                score,
                labels,
            }
        })
        .collect())
}

/// One decoded utterance as `utt_id score ph1 ph2 …`.
pub fn format_hypothesis_line(utt_id: &str, score: f64, labels: &[usize], alphabet: &Alphabet) -> String {
    let mut line = format!("{utt_id} {score}");
    for &l in labels {
        line.push(' ');
        line.push_str(alphabet.symbol(l));
    }
    line
}

/// Inverse of [`format_hypothesis_line`]. A line holding only an id (or an id
/// and score) is an empty hypothesis.
pub fn parse_hypothesis_line(
    line: &str,
    alphabet: &Alphabet,
) -> Result<(String, Option<f64>, PhonemeSequence), CtcError> {
    let mut toks = line.split_whitespace();
    let id = toks.next().ok_or(CtcError::EmptyLine)?.to_string();
    let rest: Vec<&str> = toks.collect();
    let (score, syms) = match rest.first().map(|s| s.parse::<f64>()) {
        Some(Ok(v)) => (Some(v), &rest[1..]),
        _ => (None, &rest[..]),
    };
    let labels = syms
        .iter()
        .map(|s| {
            alphabet
                .index_of(s)
                .ok_or_else(|| CtcError::UnknownSymbol(s.to_string()))
        })
        .collect::<Result<_, _>>()?;
    Ok((id, score, labels))
}
