//! Stateless layer kernels. Each forward has a matching backward that takes
//! the forward's inputs (and cached intermediates) plus the upstream gradient.

use crate::numerics::{Rng, Scalar, Tensor, TensorError};

pub fn elu_scalar<T: Scalar>(x: T, alpha: T) -> T {
    if x > T::zero() {
        x
    } else {
        alpha * x.exp_m1()
    }
}

pub fn elu_derivative<T: Scalar>(x: T, alpha: T) -> T {
    if x > T::zero() {
        T::one()
    } else {
        alpha * x.exp()
    }
}

/// `x` for `x > 0`, `alpha·(eˣ − 1)` otherwise.
pub fn elu<T: Scalar>(x: &Tensor<T>, alpha: T) -> Tensor<T> {
    x.map(|v| elu_scalar(v, alpha))
}

pub fn elu_backward<T: Scalar>(x: &Tensor<T>, grad_out: &Tensor<T>, alpha: T) -> Result<Tensor<T>, TensorError> {
    let d = x.map(|v| elu_derivative(v, alpha));
    d.elementwise_mul(grad_out)
}

fn expect_len<T: Scalar>(t: &Tensor<T>, op: &'static str, shape: &[usize]) -> Result<(), TensorError> {
    if t.shape() != shape {
        return Err(TensorError::ShapeMismatch {
            op,
            left: t.shape().to_vec(),
            right: shape.to_vec(),
        });
    }
    Ok(())
}

/// Affine map applied per row: `x (T×D)`, `w (U×D)`, `b (U)` → `T×U`.
pub fn dense_forward<T: Scalar>(x: &Tensor<T>, w: &Tensor<T>, b: &Tensor<T>) -> Result<Tensor<T>, TensorError> {
    let (_, d) = x.dims2()?;
    let (u, d2) = w.dims2()?;
    if d != d2 {
        return Err(TensorError::ShapeMismatch {
            op: "dense",
            left: x.shape().to_vec(),
            right: w.shape().to_vec(),
        });
    }
    expect_len(b, "dense bias", &[u])?;
    let mut z = x.matmul(&w.transpose()?)?;
    let (frames, _) = z.dims2()?;
    for t in 0..frames {
        for (v, &bb) in z.row_mut(t).iter_mut().zip(b.data()) {
            *v += bb;
        }
    }
    Ok(z)
}

pub struct DenseGrads<T> {
    pub input: Tensor<T>,
    pub weight: Tensor<T>,
    pub bias: Tensor<T>,
}

pub fn dense_backward<T: Scalar>(
    x: &Tensor<T>,
    w: &Tensor<T>,
    grad_out: &Tensor<T>,
) -> Result<DenseGrads<T>, TensorError> {
    let (frames, u) = grad_out.dims2()?;
    let input = grad_out.matmul(w)?;
    let weight = grad_out.transpose()?.matmul(x)?;
    let mut bias = Tensor::zeros(&[u]);
    for t in 0..frames {
        for (b, &g) in bias.data_mut().iter_mut().zip(grad_out.row(t)) {
            *b += g;
        }
    }
    Ok(DenseGrads { input, weight, bias })
}

/// Simple recurrence `hᵗ = elu(W_xh·xᵗ + W_hh·hᵗ⁻¹ + b)` with `h⁰ = 0`.
///
/// Returns `(outputs, pre_activations)`, both `T×H`.
pub fn recurrent_forward<T: Scalar>(
    x: &Tensor<T>,
    w_xh: &Tensor<T>,
    w_hh: &Tensor<T>,
    b: &Tensor<T>,
    alpha: T,
) -> Result<(Tensor<T>, Tensor<T>), TensorError> {
    let (frames, _) = x.dims2()?;
    let (h, _) = w_xh.dims2()?;
    expect_len(w_hh, "recurrent W_hh", &[h, h])?;
    let mut pre = dense_forward(x, w_xh, b)?;
    let mut out = Tensor::zeros(&[frames, h]);
    for t in 0..frames {
        if t > 0 {
            let prev = out.row(t - 1).to_vec();
            let row = pre.row_mut(t);
            for (i, r) in row.iter_mut().enumerate() {
                let w_row = &w_hh.data()[i * h..(i + 1) * h];
                *r += w_row.iter().zip(&prev).map(|(&a, &p)| a * p).sum::<T>();
            }
        }
        let pre_row = pre.row(t).to_vec();
        for (o, p) in out.row_mut(t).iter_mut().zip(pre_row) {
            *o = elu_scalar(p, alpha);
        }
    }
    Ok((out, pre))
}

pub struct RecurrentGrads<T> {
    pub input: Tensor<T>,
    pub w_xh: Tensor<T>,
    pub w_hh: Tensor<T>,
    pub bias: Tensor<T>,
}

/// Backpropagation through time over the whole sequence.
pub fn recurrent_backward<T: Scalar>(
    x: &Tensor<T>,
    out: &Tensor<T>,
    pre: &Tensor<T>,
    w_xh: &Tensor<T>,
    w_hh: &Tensor<T>,
    grad_out: &Tensor<T>,
    alpha: T,
) -> Result<RecurrentGrads<T>, TensorError> {
    let (frames, h) = out.dims2()?;
    expect_len(grad_out, "recurrent grad", &[frames, h])?;
    let mut d_pre = Tensor::zeros(&[frames, h]);
    let mut carry = vec![T::zero(); h];
    for t in (0..frames).rev() {
        let dh: Vec<T> = grad_out.row(t).iter().zip(&carry).map(|(&g, &c)| g + c).collect();
        let dp: Vec<T> = dh
            .iter()
            .zip(pre.row(t))
            .map(|(&g, &p)| g * elu_derivative(p, alpha))
            .collect();
        // carry = W_hhᵀ · dp
        carry.iter_mut().for_each(|c| *c = T::zero());
        for (i, &g) in dp.iter().enumerate() {
            let w_row = &w_hh.data()[i * h..(i + 1) * h];
            for (c, &w) in carry.iter_mut().zip(w_row) {
                *c += w * g;
            }
        }
        d_pre.row_mut(t).copy_from_slice(&dp);
    }
    let dense = dense_backward(x, w_xh, &d_pre)?;
    let mut g_hh = Tensor::zeros(&[h, h]);
    for t in 1..frames {
        let prev = out.row(t - 1);
        for (i, &g) in d_pre.row(t).iter().enumerate() {
            for (w, &p) in g_hh.row_mut(i).iter_mut().zip(prev) {
                *w += g * p;
            }
        }
    }
    Ok(RecurrentGrads {
        input: dense.input,
        w_xh: dense.weight,
        w_hh: g_hh,
        bias: dense.bias,
    })
}

/// 3×3 convolution, stride 1, one ring of zero padding:
/// `x (C_in×T×F)`, `k (C_out×C_in×3×3)`, `b (C_out)` → `C_out×T×F`.
pub fn conv2d_forward<T: Scalar>(x: &Tensor<T>, k: &Tensor<T>, b: &Tensor<T>) -> Result<Tensor<T>, TensorError> {
    let (c_in, frames, feats) = x.dims3()?;
    let kshape = k.shape();
    if kshape.len() != 4 || kshape[1] != c_in || kshape[2] != 3 || kshape[3] != 3 {
        return Err(TensorError::ShapeMismatch {
            op: "conv2d",
            left: x.shape().to_vec(),
            right: kshape.to_vec(),
        });
    }
    let c_out = kshape[0];
    expect_len(b, "conv2d bias", &[c_out])?;
    let plane = frames * feats;
    let mut out = vec![T::zero(); c_out * plane];
    let xd = x.data();
    let kd = k.data();
    for co in 0..c_out {
        let o = &mut out[co * plane..(co + 1) * plane];
        o.iter_mut().for_each(|v| *v = b.data()[co]);
        for ci in 0..c_in {
            let xi = &xd[ci * plane..(ci + 1) * plane];
            for kt in 0..3 {
                for kf in 0..3 {
                    let w = kd[((co * c_in + ci) * 3 + kt) * 3 + kf];
                    let (f_lo, f_hi) = (1usize.saturating_sub(kf), (feats + 1 - kf).min(feats));
                    for t in 0..frames {
                        let ts = t + kt;
                        if ts < 1 || ts > frames {
                            continue;
                        }
                        let src = &xi[(ts - 1) * feats..ts * feats];
                        let dst = &mut o[t * feats..(t + 1) * feats];
                        for f in f_lo..f_hi {
                            dst[f] += w * src[f + kf - 1];
                        }
                    }
                }
            }
        }
    }
    Tensor::new(vec![c_out, frames, feats], out)
}

pub struct ConvGrads<T> {
    pub input: Tensor<T>,
    pub kernel: Tensor<T>,
    pub bias: Tensor<T>,
}

pub fn conv2d_backward<T: Scalar>(
    x: &Tensor<T>,
    k: &Tensor<T>,
    grad_out: &Tensor<T>,
) -> Result<ConvGrads<T>, TensorError> {
    let (c_in, frames, feats) = x.dims3()?;
    let c_out = k.shape()[0];
    expect_len(grad_out, "conv2d grad", &[c_out, frames, feats])?;
    let plane = frames * feats;
    let xd = x.data();
    let kd = k.data();
    let gd = grad_out.data();
    let mut dx = vec![T::zero(); c_in * plane];
    let mut dk = vec![T::zero(); c_out * c_in * 9];
    let mut db = vec![T::zero(); c_out];
    for co in 0..c_out {
        let g = &gd[co * plane..(co + 1) * plane];
        db[co] = g.iter().copied().sum();
        for ci in 0..c_in {
            let xi = &xd[ci * plane..(ci + 1) * plane];
            let dxi = &mut dx[ci * plane..(ci + 1) * plane];
            for kt in 0..3 {
                for kf in 0..3 {
                    let widx = ((co * c_in + ci) * 3 + kt) * 3 + kf;
                    let w = kd[widx];
                    let (f_lo, f_hi) = (1usize.saturating_sub(kf), (feats + 1 - kf).min(feats));
                    let mut acc = T::zero();
                    for t in 0..frames {
                        let ts = t + kt;
                        if ts < 1 || ts > frames {
                            continue;
                        }
                        let src = &xi[(ts - 1) * feats..ts * feats];
                        let grow = &g[t * feats..(t + 1) * feats];
                        let drow = &mut dxi[(ts - 1) * feats..ts * feats];
                        for f in f_lo..f_hi {
                            acc += grow[f] * src[f + kf - 1];
                            drow[f + kf - 1] += w * grow[f];
                        }
                    }
                    dk[widx] += acc;
                }
            }
        }
    }
    Ok(ConvGrads {
        input: Tensor::new(x.shape().to_vec(), dx)?,
        kernel: Tensor::new(k.shape().to_vec(), dk)?,
        bias: Tensor::new(vec![c_out], db)?,
    })
}

/// Inverted dropout. Returns the output and the applied per-element scale
/// (0 or `1/(1-rate)`); in inference mode or at rate 0 the input passes through.
pub fn dropout<T: Scalar>(x: &Tensor<T>, rate: f64, rng: Option<&mut Rng>) -> (Tensor<T>, Option<Tensor<T>>) {
    match rng {
        Some(rng) if rate > 0.0 => {
            let keep = T::lit(1.0 / (1.0 - rate));
            let mut mask = Tensor::zeros(x.shape());
            for m in mask.data_mut() {
                *m = if rng.unit() < rate { T::zero() } else { keep };
            }
            let out = x.elementwise_mul(&mask).expect("mask shaped like input");
            (out, Some(mask))
        }
        _ => (x.clone(), None),
    }
}

/// `[C, T, F] → [T, C·F]`, channel-major within each frame.
pub fn maps_to_sequence<T: Scalar>(x: &Tensor<T>) -> Result<Tensor<T>, TensorError> {
    let (c, frames, feats) = x.dims3()?;
    let mut out = vec![T::zero(); c * frames * feats];
    for ci in 0..c {
        for t in 0..frames {
            let src = &x.data()[(ci * frames + t) * feats..(ci * frames + t + 1) * feats];
            out[(t * c + ci) * feats..(t * c + ci + 1) * feats].copy_from_slice(src);
        }
    }
    Tensor::new(vec![frames, c * feats], out)
}

/// Inverse of [`maps_to_sequence`].
pub fn sequence_to_maps<T: Scalar>(x: &Tensor<T>, channels: usize) -> Result<Tensor<T>, TensorError> {
    let (frames, d) = x.dims2()?;
    if channels == 0 || d % channels != 0 {
        return Err(TensorError::ShapeMismatch {
            op: "sequence_to_maps",
            left: x.shape().to_vec(),
            right: vec![channels],
        });
    }
    let feats = d / channels;
    let mut out = vec![T::zero(); d * frames];
    for ci in 0..channels {
        for t in 0..frames {
            let src = &x.data()[(t * channels + ci) * feats..(t * channels + ci + 1) * feats];
            out[(ci * frames + t) * feats..(ci * frames + t + 1) * feats].copy_from_slice(src);
        }
    }
    Tensor::new(vec![channels, frames, feats], out)
}
