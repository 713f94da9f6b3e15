//! Damerau-Levenshtein distance and phoneme error rate.
//!
//! The distance is the optimal-string-alignment (restricted) variant:
//! insertions, deletions, substitutions and transpositions of two adjacent
//! symbols, where no substring is edited more than once. It is a metric on
//! most inputs but may violate the triangle inequality.
//!
//! PER is weighted by reference length: `Σ distance / Σ |ref|`, not the mean of
//! per-utterance rates.

use std::collections::BTreeMap;
use std::fmt::Write as _;

#[derive(Debug, PartialEq, Eq, thiserror::Error)]
pub enum EvalError {
    #[error("no hypothesis for utterance `{0}`")]
    MissingHypothesis(String),
    #[error("hypothesis for unknown utterance `{0}`")]
    UnknownUtterance(String),
}

/// Restricted Damerau-Levenshtein (optimal string alignment) distance.
pub fn damerau_levenshtein<S: PartialEq>(a: &[S], b: &[S]) -> usize {
    let (n, m) = (a.len(), b.len());
    let mut d = vec![vec![0usize; m + 1]; n + 1];
    for (i, row) in d.iter_mut().enumerate() {
        row[0] = i;
    }
    for (j, cell) in d[0].iter_mut().enumerate() {
        *cell = j;
    }
    for i in 1..=n {
        for j in 1..=m {
            let cost = usize::from(a[i - 1] != b[j - 1]);
            let mut best = (d[i - 1][j] + 1).min(d[i][j - 1] + 1).min(d[i - 1][j - 1] + cost);
            if i > 1 && j > 1 && a[i - 1] == b[j - 2] && a[i - 2] == b[j - 1] {
                best = best.min(d[i - 2][j - 2] + 1);
            }
            d[i][j] = best;
        }
    }
    d[n][m]
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct UtteranceScore {
    pub distance: usize,
    pub ref_len: usize,
}

impl UtteranceScore {
    /// Per-utterance rate; an empty reference scores 0 when the hypothesis is
    /// also empty and `distance` (as if the length were 1) otherwise.
    pub fn rate(&self) -> f64 {
        self.distance as f64 / self.ref_len.max(1) as f64
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct PerReport {
    pub per_utterance: BTreeMap<String, UtteranceScore>,
}

impl PerReport {
    pub fn total_distance(&self) -> usize {
        self.per_utterance.values().map(|s| s.distance).sum()
    }

    pub fn total_ref_len(&self) -> usize {
        self.per_utterance.values().map(|s| s.ref_len).sum()
    }

    /// `Σ distance / Σ ref_len`; 0 for an empty report.
    pub fn aggregate(&self) -> f64 {
        let r = self.total_ref_len();
        if r == 0 {
            0.0
        } else {
            self.total_distance() as f64 / r as f64
        }
    }

    /// `utt_id,distance,ref_len,per` rows sorted by id, then an `ALL` row.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("utt_id,distance,ref_len,per\n");
        for (id, s) in &self.per_utterance {
            let _ = writeln!(out, "{id},{},{},{}", s.distance, s.ref_len, s.rate());
        }
        let _ = writeln!(
            out,
            "ALL,{},{},{}",
            self.total_distance(),
            self.total_ref_len(),
            self.aggregate()
        );
        out
    }
}

/// Scores every reference against its hypothesis. Both maps must cover the
/// same ids.
pub fn per<S: PartialEq>(
    refs: &BTreeMap<String, Vec<S>>,
    hyps: &BTreeMap<String, Vec<S>>,
) -> Result<PerReport, EvalError> {
    if let Some(id) = hyps.keys().find(|id| !refs.contains_key(*id)) {
        return Err(EvalError::UnknownUtterance(id.clone()));
    }
    let per_utterance = refs
        .iter()
        .map(|(id, r)| {
            let h = hyps.get(id).ok_or_else(|| EvalError::MissingHypothesis(id.clone()))?;
            Ok((
                id.clone(),
                UtteranceScore {
                    distance: damerau_levenshtein(r, h),
                    ref_len: r.len(),
                },
            ))
        })
        .collect::<Result<_, EvalError>>()?;
    Ok(PerReport { per_utterance })
}
