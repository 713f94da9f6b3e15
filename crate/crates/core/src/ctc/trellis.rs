use crate::numerics::{Scalar, Tensor};

use super::CtcError;

/// Target with blanks interleaved: `blank, l1, blank, l2, …, blank`.
pub fn extend_label(label: &[usize], blank: usize) -> Vec<usize> {
    let mut ext = Vec::with_capacity(2 * label.len() + 1);
    ext.push(blank);
    for &c in label {
        ext.push(c);
        ext.push(blank);
    }
    ext
}

/// Fewest frames that can emit `label`: one per symbol plus one blank between
/// each pair of equal neighbours.
pub fn min_frames(label: &[usize]) -> usize {
    label.len() + label.windows(2).filter(|w| w[0] == w[1]).count()
}

/// Scaled forward/backward variables over the extended label.
///
/// `alpha` and `beta` are `T × S` (S = 2|l|+1) and every row of each sums to
/// one. Variables for states that cannot reach the final two states
/// (forward) or be reached from the first two (backward) are held at zero, so
/// `log_prob = Σ_t ln alpha_scale[t]` is exact.
#[derive(Clone, Debug)]
pub struct CtcTrellis<T> {
    pub extended: Vec<usize>,
    pub alpha: Tensor<T>,
    pub beta: Tensor<T>,
    pub alpha_scale: Vec<T>,
    pub beta_scale: Vec<T>,
    /// `y[t][extended[s]]`, `T × S`.
    pub emit: Tensor<T>,
    /// `ln p(l|x)`, or `-inf` when the label cannot be emitted in `T` frames.
    pub log_prob: T,
}

impl<T: Scalar> CtcTrellis<T> {
    pub fn frames(&self) -> usize {
        self.alpha_scale.len()
    }

    pub fn is_feasible(&self) -> bool {
        self.log_prob.is_finite()
    }

    pub fn prob(&self) -> T {
        self.log_prob.exp()
    }
}

fn row_sum_tolerance<T: Scalar>() -> f64 {
    (1e3 * T::epsilon().to_f64_lossy()).max(1e-9)
}

fn check_label(label: &[usize], blank: usize, num_labels: usize) -> Result<(), CtcError> {
    if blank >= num_labels {
        return Err(CtcError::BlankOutOfRange { blank, num_labels });
    }
    for &c in label {
        if c >= num_labels || c == blank {
            return Err(CtcError::BadLabel {
                label: c,
                blank,
                num_labels,
            });
        }
    }
    Ok(())
}

/// Runs the scaled forward–backward recursions on a row-stochastic `T × K`
/// matrix of label probabilities.
pub fn ctc_forward<T: Scalar>(y: &Tensor<T>, label: &[usize], blank: usize) -> Result<CtcTrellis<T>, CtcError> {
    let (frames, k) = y.dims2()?;
    check_label(label, blank, k)?;
    let tol = row_sum_tolerance::<T>();
    for t in 0..frames {
        let s: T = y.row(t).iter().copied().sum();
        if (s.to_f64_lossy() - 1.0).abs() > tol || y.row(t).iter().any(|&p| p < T::zero()) {
            return Err(CtcError::NotStochastic {
                frame: t,
                sum: s.to_f64_lossy(),
            });
        }
    }
    Ok(forward_backward(y, label, blank))
}

pub(crate) fn forward_backward<T: Scalar>(y: &Tensor<T>, label: &[usize], blank: usize) -> CtcTrellis<T> {
    let (frames, _) = y.dims2().expect("rank 2");
    let ext = extend_label(label, blank);
    let s_len = ext.len();
    let mut emit = Tensor::zeros(&[frames, s_len]);
    for t in 0..frames {
        let row = y.row(t);
        for (e, &c) in emit.row_mut(t).iter_mut().zip(&ext) {
            *e = row[c];
        }
    }
    let mut alpha = Tensor::zeros(&[frames, s_len]);
    let mut beta = Tensor::zeros(&[frames, s_len]);
    let infeasible = |emit: Tensor<T>, alpha, beta| CtcTrellis {
        extended: ext.clone(),
        alpha,
        beta,
        alpha_scale: vec![T::zero(); frames],
        beta_scale: vec![T::zero(); frames],
        emit,
        log_prob: T::neg_infinity(),
    };
    if frames == 0 || frames < min_frames(label) {
        return infeasible(emit, alpha, beta);
    }
    let skip = |s: usize| s >= 2 && ext[s] != blank && ext[s] != ext[s - 2];

    let mut alpha_scale = vec![T::zero(); frames];
    for (t, scale) in alpha_scale.iter_mut().enumerate() {
        // States that can still reach the final blank or final symbol.
        let lo = s_len.saturating_sub(2 * (frames - t));
        let hi = (2 * t + 2).min(s_len);
        for s in lo..hi {
            let a = if t == 0 {
                T::one()
            } else {
                let prev = alpha.row(t - 1);
                let mut a = prev[s];
                if s >= 1 {
                    a += prev[s - 1];
                }
                if skip(s) {
                    a += prev[s - 2];
                }
                a
            };
            let v = a * emit.get2(t, s);
            alpha.row_mut(t)[s] = v;
        }
        let c: T = alpha.row(t).iter().copied().sum();
        if c.is_nan() || c <= T::zero() {
            return infeasible(emit, Tensor::zeros(&[frames, s_len]), beta);
        }
        alpha.row_mut(t).iter_mut().for_each(|v| *v /= c);
        *scale = c;
    }
    let log_prob = alpha_scale.iter().map(|c| c.ln()).sum::<T>();

    let skip_back = |s: usize| s + 2 < s_len && ext[s] != blank && ext[s + 2] != ext[s];
    let mut beta_scale = vec![T::zero(); frames];
    for t in (0..frames).rev() {
        let lo = s_len.saturating_sub(2 * (frames - t));
        let hi = (2 * t + 2).min(s_len);
        for s in lo..hi {
            let b = if t == frames - 1 {
                T::one()
            } else {
                let next = beta.row(t + 1);
                let mut b = next[s];
                if s + 1 < s_len {
                    b += next[s + 1];
                }
                if skip_back(s) {
                    b += next[s + 2];
                }
                b
            };
            beta.row_mut(t)[s] = b * emit.get2(t, s);
        }
        let d: T = beta.row(t).iter().copied().sum();
        if d > T::zero() {
            beta.row_mut(t).iter_mut().for_each(|v| *v /= d);
        }
        beta_scale[t] = d;
    }

    CtcTrellis {
        extended: ext,
        alpha,
        beta,
        alpha_scale,
        beta_scale,
        emit,
        log_prob,
    }
}

/// Row-wise numerically stable softmax of a `T × K` matrix.
pub fn softmax_rows<T: Scalar>(u: &Tensor<T>) -> Result<Tensor<T>, CtcError> {
    let (frames, _) = u.dims2()?;
    let mut y = u.clone();
    for t in 0..frames {
        let row = y.row_mut(t);
        let m = row.iter().copied().fold(T::neg_infinity(), T::max);
        let mut z = T::zero();
        for v in row.iter_mut() {
            *v = (*v - m).exp();
            z += *v;
        }
        row.iter_mut().for_each(|v| *v /= z);
    }
    Ok(y)
}

/// Negative log-likelihood `-ln p(l|x)` of pre-softmax activations `u` and its
/// gradient with respect to `u`.
pub fn ctc_loss_and_grad<T: Scalar>(u: &Tensor<T>, label: &[usize], blank: usize) -> Result<(T, Tensor<T>), CtcError> {
    let (frames, k) = u.dims2()?;
    check_label(label, blank, k)?;
    if let Err(e) = u.check_finite() {
        return Err(CtcError::Tensor(e));
    }
    let y = softmax_rows(u)?;
    let tr = forward_backward(&y, label, blank);
    if !tr.is_feasible() {
        return Err(CtcError::Infeasible {
            frames,
            label_len: label.len(),
            required: min_frames(label),
        });
    }
    let s_len = tr.extended.len();
    let mut grad = y.clone();
    let mut occupancy = vec![T::zero(); k];
    for t in 0..frames {
        occupancy.iter_mut().for_each(|o| *o = T::zero());
        let mut z = T::zero();
        for s in 0..s_len {
            let e = tr.emit.get2(t, s);
            if e > T::zero() {
                let g = tr.alpha.get2(t, s) * tr.beta.get2(t, s) / e;
                occupancy[tr.extended[s]] += g;
                z += g;
            }
        }
        for (g, &occ) in grad.row_mut(t).iter_mut().zip(&occupancy) {
            *g -= occ / z;
        }
    }
    Ok((-tr.log_prob, grad))
}

/// Per-frame reconstruction of `ln p(l|x)` from `Σ_s α_t(s) β_t(s) / y_t(l'_s)`
/// in the unscaled convention. Every entry equals `trellis.log_prob` up to
/// rounding; the spread is a diagnostic for the recursions.
pub fn ctc_posterior_check<T: Scalar>(trellis: &CtcTrellis<T>) -> Vec<f64> {
    let frames = trellis.frames();
    if !trellis.is_feasible() {
        return vec![f64::NEG_INFINITY; frames];
    }
    let ln_c: Vec<f64> = trellis.alpha_scale.iter().map(|c| c.to_f64_lossy().ln()).collect();
    let ln_d: Vec<f64> = trellis.beta_scale.iter().map(|d| d.to_f64_lossy().ln()).collect();
    let mut prefix = 0.0;
    let mut suffix: f64 = ln_d.iter().sum();
    let mut out = Vec::with_capacity(frames);
    for t in 0..frames {
        prefix += ln_c[t];
        let mut acc = 0.0;
        for s in 0..trellis.extended.len() {
            let e = trellis.emit.get2(t, s).to_f64_lossy();
            if e > 0.0 {
                acc += trellis.alpha.get2(t, s).to_f64_lossy() * trellis.beta.get2(t, s).to_f64_lossy() / e;
            }
        }
        out.push(acc.ln() + prefix + suffix);
        suffix -= ln_d[t];
    }
    out
}
