//! Independent oracles shared by the integration suites. Nothing here calls
//! the code path it is used to check.

#![allow(dead_code)]

use rcnn_core::numerics::{Rng, Tensor};

/// Central-difference step.
pub const FD_STEP: f64 = 1e-6;
/// Gradients smaller than this are compared in absolute terms.
pub const GRAD_FLOOR: f64 = 1e-3;

pub fn rel_err(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(GRAD_FLOOR)
}

/// Central finite difference of `f` at every coordinate of `x`; returns the
/// worst relative error against `analytic`.
pub fn fd_max_rel_err(f: &mut dyn FnMut(&[f64]) -> f64, x: &[f64], analytic: &[f64]) -> f64 {
    assert_eq!(x.len(), analytic.len());
    let mut probe = x.to_vec();
    let mut worst: f64 = 0.0;
    for i in 0..x.len() {
        probe[i] = x[i] + FD_STEP;
        let up = f(&probe);
        probe[i] = x[i] - FD_STEP;
        let down = f(&probe);
        probe[i] = x[i];
        let numeric = (up - down) / (2.0 * FD_STEP);
        worst = worst.max(rel_err(analytic[i], numeric));
    }
    worst
}

pub fn random_tensor(shape: &[usize], rng: &mut Rng, scale: f64) -> Tensor<f64> {
    let n: usize = shape.iter().product();
    Tensor::new(
        shape.to_vec(),
        (0..n).map(|_| (2.0 * rng.unit() - 1.0) * scale).collect(),
    )
    .unwrap()
}

/// Random row-stochastic `T × K` matrix with entries bounded away from zero.
pub fn random_stochastic(frames: usize, k: usize, rng: &mut Rng) -> Tensor<f64> {
    let mut rows = Vec::with_capacity(frames);
    for _ in 0..frames {
        let raw: Vec<f64> = (0..k).map(|_| 0.05 + rng.unit()).collect();
        let s: f64 = raw.iter().sum();
        rows.push(raw.into_iter().map(|v| v / s).collect());
    }
    Tensor::from_rows(&rows).unwrap()
}

/// Naive collapsing map: merge repeats, then remove blanks.
pub fn collapse_path(path: &[usize], blank: usize) -> Vec<usize> {
    let mut merged: Vec<usize> = Vec::new();
    for &c in path {
        if merged.last() != Some(&c) {
            merged.push(c);
        }
    }
    merged.into_iter().filter(|&c| c != blank).collect()
}

/// Calls `visit` on every length-`frames` path over `k` labels.
pub fn for_each_path(frames: usize, k: usize, visit: &mut dyn FnMut(&[usize])) {
    let mut path = vec![0usize; frames];
    loop {
        visit(&path);
        let mut i = 0;
        loop {
            if i == frames {
                return;
            }
            path[i] += 1;
            if path[i] < k {
                break;
            }
            path[i] = 0;
            i += 1;
        }
    }
}

/// `p(l|x)` by summing every path that collapses to `label`.
pub fn ctc_brute_force(y: &Tensor<f64>, label: &[usize], blank: usize) -> f64 {
    let (frames, k) = y.dims2().unwrap();
    let mut total = 0.0;
    for_each_path(frames, k, &mut |path| {
        if collapse_path(path, blank) == label {
            total += path.iter().enumerate().map(|(t, &c)| y.get2(t, c)).product::<f64>();
        }
    });
    total
}

/// Probability of every labelling reachable in `frames` steps.
pub fn all_labelling_probs(y: &Tensor<f64>, blank: usize) -> std::collections::BTreeMap<Vec<usize>, f64> {
    let (frames, k) = y.dims2().unwrap();
    let mut probs = std::collections::BTreeMap::new();
    for_each_path(frames, k, &mut |path| {
        let p: f64 = path.iter().enumerate().map(|(t, &c)| y.get2(t, c)).product();
        *probs.entry(collapse_path(path, blank)).or_insert(0.0) += p;
    });
    probs
}

/// Every label sequence of length `0..=max_len` over `symbols` non-blank labels.
pub fn all_sequences(symbols: usize, max_len: usize) -> Vec<Vec<usize>> {
    let mut out = vec![Vec::new()];
    let mut frontier = vec![Vec::new()];
    for _ in 0..max_len {
        let mut next = Vec::new();
        for s in &frontier {
            for c in 0..symbols {
                let mut e: Vec<usize> = s.clone();
                e.push(c);
                next.push(e);
            }
        }
        out.extend(next.iter().cloned());
        frontier = next;
    }
    out
}

/// Restricted Damerau-Levenshtein by exhaustive search over edit scripts:
/// every alignment of `a` against `b` built from match/substitute, insert,
/// delete and adjacent transposition of untouched symbols, without memoisation.
pub fn osa_brute_force(a: &[u8], b: &[u8]) -> usize {
    fn go(a: &[u8], b: &[u8]) -> usize {
        if a.is_empty() {
            return b.len();
        }
        if b.is_empty() {
            return a.len();
        }
        let mut best = go(&a[1..], b) + 1;
        best = best.min(go(a, &b[1..]) + 1);
        best = best.min(go(&a[1..], &b[1..]) + usize::from(a[0] != b[0]));
        if a.len() >= 2 && b.len() >= 2 && a[0] == b[1] && a[1] == b[0] {
            best = best.min(go(&a[2..], &b[2..]) + 1);
        }
        best
    }
    go(a, b)
}

pub mod gradcheck;
