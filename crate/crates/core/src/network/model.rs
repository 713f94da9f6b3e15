use crate::numerics::{glorot_init, Gradients, ParamId, ParameterStore, Rng, Scalar, Tensor};

use super::config::{Activation, Flow, LayerSpec, NetworkConfig};
use super::layers::{self, elu_derivative, elu_scalar};
use super::NetworkError;

/// ELU slope for negative inputs, used everywhere.
pub const ELU_ALPHA: f64 = 1.0;

#[derive(Clone, Debug)]
enum Op {
    Recurrent {
        w_xh: ParamId,
        w_hh: ParamId,
        b: ParamId,
    },
    Conv {
        k: ParamId,
        b: ParamId,
        activation: Activation,
    },
    Dense {
        w: ParamId,
        b: ParamId,
        activation: Activation,
    },
    Elu,
    Dropout {
        rate: f64,
    },
}

#[derive(Clone, Debug)]
enum Block {
    Single(usize),
    /// Layers `start..end` wrapped as `elu(x + F(x))`.
    Residual(usize, usize),
}

/// A built, immutable network. Parameters live in a separate [`ParameterStore`].
#[derive(Clone, Debug)]
pub struct Network {
    config: NetworkConfig,
    input_dim: usize,
    ops: Vec<Op>,
    blocks: Vec<Block>,
}

/// Whether dropout is active; training mode carries the dropout stream.
pub enum Mode<'a> {
    Train(&'a mut Rng),
    Infer,
}

#[derive(Clone, Debug)]
enum LayerCache<T> {
    Recurrent {
        x: Tensor<T>,
        out: Tensor<T>,
        pre: Tensor<T>,
    },
    Conv {
        x: Tensor<T>,
        pre: Tensor<T>,
    },
    Dense {
        x: Tensor<T>,
        pre: Tensor<T>,
    },
    Elu {
        x: Tensor<T>,
    },
    Dropout {
        mask: Option<Tensor<T>>,
    },
}

#[derive(Clone, Debug)]
struct StepCache<T> {
    /// Shape of the activation before the layer's layout conversion.
    in_shape: Vec<usize>,
    layer: LayerCache<T>,
}

#[derive(Clone, Debug)]
enum BlockCache<T> {
    Single(StepCache<T>),
    Residual {
        in_shape: Vec<usize>,
        inner: Vec<StepCache<T>>,
        sum: Tensor<T>,
    },
}

/// Intermediates kept by a forward pass for the matching backward pass.
#[derive(Clone, Debug)]
pub struct ActivationCache<T> {
    blocks: Vec<BlockCache<T>>,
    frames: usize,
    valid: usize,
}

/// Zeroes every frame at or past `valid`, in either layout.
fn mask_frames<T: Scalar>(x: &mut Tensor<T>, valid: usize) {
    match x.rank() {
        2 => {
            let (frames, width) = (x.shape()[0], x.shape()[1]);
            if valid < frames {
                x.data_mut()[valid * width..].iter_mut().for_each(|v| *v = T::zero());
            }
        }
        3 => {
            let (c, frames, feats) = (x.shape()[0], x.shape()[1], x.shape()[2]);
            if valid < frames {
                for ci in 0..c {
                    let plane = &mut x.data_mut()[ci * frames * feats..(ci + 1) * frames * feats];
                    plane[valid * feats..].iter_mut().for_each(|v| *v = T::zero());
                }
            }
        }
        _ => {}
    }
}

fn as_sequence<T: Scalar>(x: Tensor<T>) -> Result<Tensor<T>, NetworkError> {
    Ok(match x.rank() {
        2 => x,
        _ => layers::maps_to_sequence(&x)?,
    })
}

fn as_maps<T: Scalar>(x: Tensor<T>) -> Result<Tensor<T>, NetworkError> {
    Ok(match x.rank() {
        3 => x,
        _ => {
            let (t, d) = x.dims2()?;
            x.reshape(&[1, t, d])?
        }
    })
}

/// Converts a gradient back to the layout the layer received.
fn restore_layout<T: Scalar>(g: Tensor<T>, in_shape: &[usize]) -> Result<Tensor<T>, NetworkError> {
    if g.shape() == in_shape {
        return Ok(g);
    }
    Ok(match (g.rank(), in_shape.len()) {
        (2, 3) => layers::sequence_to_maps(&g, in_shape[0])?,
        _ => g.reshape(in_shape)?,
    })
}

fn activate<T: Scalar>(pre: &Tensor<T>, act: Activation) -> Tensor<T> {
    match act {
        Activation::Elu => pre.map(|v| elu_scalar(v, T::lit(ELU_ALPHA))),
        Activation::Linear => pre.clone(),
    }
}

fn activation_backward<T: Scalar>(pre: &Tensor<T>, g: &Tensor<T>, act: Activation) -> Result<Tensor<T>, NetworkError> {
    Ok(match act {
        Activation::Elu => layers::elu_backward(pre, g, T::lit(ELU_ALPHA))?,
        Activation::Linear => g.clone(),
    })
}

impl Network {
    /// Validates `config`, registers its parameters in a fresh store
    /// (Glorot-uniform weights, zero biases) and returns both.
    pub fn build<T: Scalar>(
        config: &NetworkConfig,
        input_dim: usize,
        rng: &mut Rng,
    ) -> Result<(Network, ParameterStore<T>), NetworkError> {
        config.validate()?;
        if input_dim == 0 {
            return Err(NetworkError::InvalidConfig("input dimension is zero".into()));
        }
        let flows = config.flows(input_dim);
        let mut store = ParameterStore::new();
        let mut ops = Vec::with_capacity(config.layers.len());
        for (i, (layer, flow)) in config.layers.iter().zip(&flows).enumerate() {
            let prefix = format!("{i:02}.{}", layer.kind());
            let mut weight = |suffix: &str, shape: &[usize], store: &mut ParameterStore<T>| {
                let w = glorot_init(shape, rng)?;
                store.insert(&format!("{prefix}.{suffix}"), w)
            };
            let op = match *layer {
                LayerSpec::Recurrent { hidden_units: h } => Op::Recurrent {
                    w_xh: weight("w_xh", &[h, flow.width()], &mut store)?,
                    w_hh: weight("w_hh", &[h, h], &mut store)?,
                    b: store.insert(&format!("{prefix}.b"), Tensor::zeros(&[h]))?,
                },
                LayerSpec::Conv2d {
                    feature_maps,
                    activation,
                } => Op::Conv {
                    k: weight("k", &[feature_maps, flow.channels(), 3, 3], &mut store)?,
                    b: store.insert(&format!("{prefix}.b"), Tensor::zeros(&[feature_maps]))?,
                    activation,
                },
                LayerSpec::Dense { units, activation } => Op::Dense {
                    w: weight("w", &[units, flow.width()], &mut store)?,
                    b: store.insert(&format!("{prefix}.b"), Tensor::zeros(&[units]))?,
                    activation,
                },
                LayerSpec::LinearOutput { units } => Op::Dense {
                    w: weight("w", &[units, flow.width()], &mut store)?,
                    b: store.insert(&format!("{prefix}.b"), Tensor::zeros(&[units]))?,
                    activation: Activation::Linear,
                },
                LayerSpec::Elu => Op::Elu,
                LayerSpec::Dropout { rate } => Op::Dropout { rate },
            };
            ops.push(op);
        }
        let mut spans = config.residual_groups.clone();
        spans.sort_unstable();
        let mut blocks = Vec::new();
        let mut i = 0;
        let mut next_span = spans.iter().peekable();
        while i < ops.len() {
            match next_span.peek() {
                Some(&&(start, end)) if start == i => {
                    blocks.push(Block::Residual(start, end));
                    next_span.next();
                    i = end;
                }
                _ => {
                    blocks.push(Block::Single(i));
                    i += 1;
                }
            }
        }
        let net = Network {
            config: config.clone(),
            input_dim,
            ops,
            blocks,
        };
        debug_assert_eq!(store.num_params(), config.param_count(input_dim));
        Ok((net, store))
    }

    pub fn config(&self) -> &NetworkConfig {
        &self.config
    }

    pub fn input_dim(&self) -> usize {
        self.input_dim
    }

    pub fn output_dim(&self) -> usize {
        self.config
            .output_units()
            .expect("validated config ends in linear_output")
    }

    fn step<T: Scalar>(
        &self,
        idx: usize,
        store: &ParameterStore<T>,
        x: Tensor<T>,
        mode: &mut Mode<'_>,
    ) -> Result<(Tensor<T>, StepCache<T>), NetworkError> {
        let in_shape = x.shape().to_vec();
        let alpha = T::lit(ELU_ALPHA);
        let (out, layer) = match &self.ops[idx] {
            Op::Recurrent { w_xh, w_hh, b } => {
                let x = as_sequence(x)?;
                let (out, pre) =
                    layers::recurrent_forward(&x, store.value(*w_xh), store.value(*w_hh), store.value(*b), alpha)?;
                (out.clone(), LayerCache::Recurrent { x, out, pre })
            }
            Op::Conv { k, b, activation } => {
                let x = as_maps(x)?;
                let pre = layers::conv2d_forward(&x, store.value(*k), store.value(*b))?;
                (activate(&pre, *activation), LayerCache::Conv { x, pre })
            }
            Op::Dense { w, b, activation } => {
                let x = as_sequence(x)?;
                let pre = layers::dense_forward(&x, store.value(*w), store.value(*b))?;
                (activate(&pre, *activation), LayerCache::Dense { x, pre })
            }
            Op::Elu => (layers::elu(&x, alpha), LayerCache::Elu { x }),
            Op::Dropout { rate } => {
                let rng = match mode {
                    Mode::Train(rng) => Some(&mut **rng),
                    Mode::Infer => None,
                };
                let (out, mask) = layers::dropout(&x, *rate, rng);
                (out, LayerCache::Dropout { mask })
            }
        };
        Ok((out, StepCache { in_shape, layer }))
    }

    fn step_backward<T: Scalar>(
        &self,
        idx: usize,
        store: &ParameterStore<T>,
        cache: &StepCache<T>,
        g: Tensor<T>,
        grads: &mut Gradients<T>,
    ) -> Result<Tensor<T>, NetworkError> {
        let alpha = T::lit(ELU_ALPHA);
        let gx = match (&self.ops[idx], &cache.layer) {
            (Op::Recurrent { w_xh, w_hh, b }, LayerCache::Recurrent { x, out, pre }) => {
                let r = layers::recurrent_backward(x, out, pre, store.value(*w_xh), store.value(*w_hh), &g, alpha)?;
                grads.get_mut(*w_xh).add_assign(&r.w_xh)?;
                grads.get_mut(*w_hh).add_assign(&r.w_hh)?;
                grads.get_mut(*b).add_assign(&r.bias)?;
                r.input
            }
            (Op::Conv { k, b, activation }, LayerCache::Conv { x, pre }) => {
                let g = activation_backward(pre, &g, *activation)?;
                let r = layers::conv2d_backward(x, store.value(*k), &g)?;
                grads.get_mut(*k).add_assign(&r.kernel)?;
                grads.get_mut(*b).add_assign(&r.bias)?;
                r.input
            }
            (Op::Dense { w, b, activation }, LayerCache::Dense { x, pre }) => {
                let g = activation_backward(pre, &g, *activation)?;
                let r = layers::dense_backward(x, store.value(*w), &g)?;
                grads.get_mut(*w).add_assign(&r.weight)?;
                grads.get_mut(*b).add_assign(&r.bias)?;
                r.input
            }
            (Op::Elu, LayerCache::Elu { x }) => layers::elu_backward(x, &g, alpha)?,
            (Op::Dropout { .. }, LayerCache::Dropout { mask }) => match mask {
                Some(m) => g.elementwise_mul(m)?,
                None => g,
            },
            _ => unreachable!("cache kind always matches its op"),
        };
        restore_layout(gx, &cache.in_shape)
    }

    /// Runs the network on one `T × input_dim` utterance and returns the
    /// `T × output_dim` pre-softmax activations with the cache for backward.
    pub fn forward<T: Scalar>(
        &self,
        store: &ParameterStore<T>,
        x: &Tensor<T>,
        mode: Mode<'_>,
    ) -> Result<(Tensor<T>, ActivationCache<T>), NetworkError> {
        let frames = x.shape().first().copied().unwrap_or(0);
        self.forward_masked(store, x, frames, mode)
    }

    /// Forward pass over a padded utterance whose first `valid` frames are
    /// real. Every layer's output is zeroed past `valid`, so the real frames
    /// see exactly the zero boundary they would see unpadded and their
    /// outputs do not depend on how much padding follows.
    pub fn forward_masked<T: Scalar>(
        &self,
        store: &ParameterStore<T>,
        x: &Tensor<T>,
        valid: usize,
        mut mode: Mode<'_>,
    ) -> Result<(Tensor<T>, ActivationCache<T>), NetworkError> {
        let (frames, d) = x.dims2()?;
        if d != self.input_dim {
            return Err(NetworkError::InputWidth {
                expected: self.input_dim,
                actual: d,
            });
        }
        let valid = valid.min(frames);
        let masked = valid < frames;
        let mut cur = x.clone();
        if masked {
            mask_frames(&mut cur, valid);
        }
        let mut caches = Vec::with_capacity(self.blocks.len());
        for block in &self.blocks {
            match *block {
                Block::Single(i) => {
                    let (mut out, c) = self.step(i, store, cur, &mut mode)?;
                    if masked {
                        mask_frames(&mut out, valid);
                    }
                    cur = out;
                    caches.push(BlockCache::Single(c));
                }
                Block::Residual(start, end) => {
                    let in_shape = cur.shape().to_vec();
                    let shortcut = as_maps(cur)?;
                    let mut h = shortcut.clone();
                    let mut inner = Vec::with_capacity(end - start);
                    for i in start..end {
                        let (mut out, c) = self.step(i, store, h, &mut mode)?;
                        if masked {
                            mask_frames(&mut out, valid);
                        }
                        h = out;
                        inner.push(c);
                    }
                    let sum = shortcut.add(&h).map_err(|_| NetworkError::ResidualShape {
                        shortcut: shortcut.shape().to_vec(),
                        branch: h.shape().to_vec(),
                    })?;
                    cur = layers::elu(&sum, T::lit(ELU_ALPHA));
                    if masked {
                        mask_frames(&mut cur, valid);
                    }
                    caches.push(BlockCache::Residual { in_shape, inner, sum });
                }
            }
        }
        Ok((
            as_sequence(cur)?,
            ActivationCache {
                blocks: caches,
                frames,
                valid,
            },
        ))
    }

    /// Inference-mode forward without keeping the cache.
    pub fn infer<T: Scalar>(&self, store: &ParameterStore<T>, x: &Tensor<T>) -> Result<Tensor<T>, NetworkError> {
        Ok(self.forward(store, x, Mode::Infer)?.0)
    }

    /// Back-propagates `grad_out` (same shape as the forward output),
    /// accumulating parameter gradients into `grads`. Returns the gradient
    /// with respect to the network input.
    pub fn backward<T: Scalar>(
        &self,
        store: &ParameterStore<T>,
        cache: &ActivationCache<T>,
        grad_out: &Tensor<T>,
        grads: &mut Gradients<T>,
    ) -> Result<Tensor<T>, NetworkError> {
        let (valid, masked) = (cache.valid, cache.valid < cache.frames);
        let mask = |mut g: Tensor<T>| {
            if masked {
                mask_frames(&mut g, valid);
            }
            g
        };
        let mut g = grad_out.clone();
        for (block, bc) in self.blocks.iter().zip(&cache.blocks).rev() {
            g = match (block, bc) {
                (Block::Single(i), BlockCache::Single(c)) => self.step_backward(*i, store, c, mask(g), grads)?,
                (Block::Residual(start, _), BlockCache::Residual { in_shape, inner, sum }) => {
                    let g = mask(restore_layout(g, sum.shape())?);
                    let ds = sum.map(|v| elu_derivative(v, T::lit(ELU_ALPHA))).elementwise_mul(&g)?;
                    let mut gb = ds.clone();
                    for (off, c) in inner.iter().enumerate().rev() {
                        gb = self.step_backward(start + off, store, c, mask(gb), grads)?;
                    }
                    let total = ds.add(&gb)?;
                    restore_layout(total, in_shape)?
                }
                _ => unreachable!("cache mirrors block structure"),
            };
        }
        let (t, d) = (g.len() / self.input_dim, self.input_dim);
        Ok(mask(g.reshape(&[t, d])?))
    }
}

/// Forward + backward of a single residual block `elu(x + F(x))`, exposed
/// for direct testing. `inner` must be conv layers that preserve `x`'s maps.
pub fn residual_block_forward<T: Scalar>(
    x: &Tensor<T>,
    inner: &[(Tensor<T>, Tensor<T>, Activation)],
) -> Result<Tensor<T>, NetworkError> {
    let mut h = x.clone();
    for (k, b, act) in inner {
        h = activate(&layers::conv2d_forward(&h, k, b)?, *act);
    }
    let sum = x.add(&h).map_err(|_| NetworkError::ResidualShape {
        shortcut: x.shape().to_vec(),
        branch: h.shape().to_vec(),
    })?;
    Ok(layers::elu(&sum, T::lit(ELU_ALPHA)))
}

/// Gradients of `residual_block_forward` for upstream gradient `grad_out`:
/// the input gradient and one `(kernel, bias)` pair per inner layer.
#[allow(clippy::type_complexity)]
pub fn residual_block_backward<T: Scalar>(
    x: &Tensor<T>,
    inner: &[(Tensor<T>, Tensor<T>, Activation)],
    grad_out: &Tensor<T>,
) -> Result<(Tensor<T>, Vec<(Tensor<T>, Tensor<T>)>), NetworkError> {
    let mut inputs = Vec::with_capacity(inner.len());
    let mut pres = Vec::with_capacity(inner.len());
    let mut h = x.clone();
    for (k, b, act) in inner {
        let pre = layers::conv2d_forward(&h, k, b)?;
        inputs.push(h);
        h = activate(&pre, *act);
        pres.push(pre);
    }
    let sum = x.add(&h)?;
    let ds = sum
        .map(|v| elu_derivative(v, T::lit(ELU_ALPHA)))
        .elementwise_mul(grad_out)?;
    let mut g = ds.clone();
    let mut param_grads = Vec::with_capacity(inner.len());
    for (i, (k, _, act)) in inner.iter().enumerate().rev() {
        let gp = activation_backward(&pres[i], &g, *act)?;
        let r = layers::conv2d_backward(&inputs[i], k, &gp)?;
        param_grads.push((r.kernel, r.bias));
        g = r.input;
    }
    param_grads.reverse();
    Ok((ds.add(&g)?, param_grads))
}

/// Flow shapes are internal; expose the per-layer activation shapes for tools.
pub fn layer_shapes(config: &NetworkConfig, input_dim: usize) -> Vec<String> {
    config
        .flows(input_dim)
        .into_iter()
        .map(|f| match f {
            Flow::Sequence(w) => format!("T×{w}"),
            Flow::Maps(c, feat) => format!("{c}×T×{feat}"),
        })
        .collect()
}
