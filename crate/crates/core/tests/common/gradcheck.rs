//! Finite-difference sweeps. Each returns the worst relative error seen over
//! `instances` random problems, with the scalar objective `Σ out ⊙ R` for a
//! fixed random `R` so every output element contributes.

use rcnn_core::ctc::ctc_loss_and_grad;
use rcnn_core::network::layers::{
    conv2d_backward, conv2d_forward, dense_backward, dense_forward, elu, elu_backward, recurrent_backward,
    recurrent_forward,
};
use rcnn_core::network::{
    residual_block_backward, residual_block_forward, Activation, LayerSpec, Mode, Network, NetworkConfig,
};
use rcnn_core::numerics::{ParameterStore, Rng, Tensor};

use super::{fd_max_rel_err, random_tensor};

fn dot(a: &Tensor<f64>, b: &Tensor<f64>) -> f64 {
    a.data().iter().zip(b.data()).map(|(x, y)| x * y).sum()
}

fn with(shape: &[usize], v: &[f64]) -> Tensor<f64> {
    Tensor::new(shape.to_vec(), v.to_vec()).unwrap()
}

pub fn elu_sweep(instances: usize, seed: u64) -> f64 {
    let mut worst: f64 = 0.0;
    for i in 0..instances {
        let mut rng = Rng::derive(seed, &[i as u64]);
        let n = rng.range_inclusive(1, 20);
        let x = random_tensor(&[n], &mut rng, 3.0);
        let r = random_tensor(&[n], &mut rng, 1.0);
        let analytic = elu_backward(&x, &r, 1.0).unwrap();
        let err = fd_max_rel_err(&mut |v| dot(&elu(&with(&[n], v), 1.0), &r), x.data(), analytic.data());
        worst = worst.max(err);
    }
    worst
}

pub fn dense_sweep(instances: usize, seed: u64) -> f64 {
    let mut worst: f64 = 0.0;
    for i in 0..instances {
        let mut rng = Rng::derive(seed, &[i as u64]);
        let (t, d, u) = (
            rng.range_inclusive(1, 4),
            rng.range_inclusive(1, 5),
            rng.range_inclusive(1, 5),
        );
        let x = random_tensor(&[t, d], &mut rng, 1.0);
        let w = random_tensor(&[u, d], &mut rng, 1.0);
        let b = random_tensor(&[u], &mut rng, 1.0);
        let r = random_tensor(&[t, u], &mut rng, 1.0);
        let g = dense_backward(&x, &w, &r).unwrap();
        let f = |x: &Tensor<f64>, w: &Tensor<f64>, b: &Tensor<f64>| dot(&dense_forward(x, w, b).unwrap(), &r);
        worst = worst
            .max(fd_max_rel_err(
                &mut |v| f(&with(&[t, d], v), &w, &b),
                x.data(),
                g.input.data(),
            ))
            .max(fd_max_rel_err(
                &mut |v| f(&x, &with(&[u, d], v), &b),
                w.data(),
                g.weight.data(),
            ))
            .max(fd_max_rel_err(
                &mut |v| f(&x, &w, &with(&[u], v)),
                b.data(),
                g.bias.data(),
            ));
    }
    worst
}

pub fn recurrent_sweep(instances: usize, seed: u64) -> f64 {
    let mut worst: f64 = 0.0;
    for i in 0..instances {
        let mut rng = Rng::derive(seed, &[i as u64]);
        let (t, d, h) = (
            rng.range_inclusive(1, 4),
            rng.range_inclusive(1, 5),
            rng.range_inclusive(1, 5),
        );
        let x = random_tensor(&[t, d], &mut rng, 1.0);
        let wx = random_tensor(&[h, d], &mut rng, 0.8);
        let wh = random_tensor(&[h, h], &mut rng, 0.8);
        let b = random_tensor(&[h], &mut rng, 0.5);
        let r = random_tensor(&[t, h], &mut rng, 1.0);
        let (out, pre) = recurrent_forward(&x, &wx, &wh, &b, 1.0).unwrap();
        let g = recurrent_backward(&x, &out, &pre, &wx, &wh, &r, 1.0).unwrap();
        let f = |x: &Tensor<f64>, wx: &Tensor<f64>, wh: &Tensor<f64>, b: &Tensor<f64>| {
            dot(&recurrent_forward(x, wx, wh, b, 1.0).unwrap().0, &r)
        };
        worst = worst
            .max(fd_max_rel_err(
                &mut |v| f(&with(&[t, d], v), &wx, &wh, &b),
                x.data(),
                g.input.data(),
            ))
            .max(fd_max_rel_err(
                &mut |v| f(&x, &with(&[h, d], v), &wh, &b),
                wx.data(),
                g.w_xh.data(),
            ))
            .max(fd_max_rel_err(
                &mut |v| f(&x, &wx, &with(&[h, h], v), &b),
                wh.data(),
                g.w_hh.data(),
            ))
            .max(fd_max_rel_err(
                &mut |v| f(&x, &wx, &wh, &with(&[h], v)),
                b.data(),
                g.bias.data(),
            ));
    }
    worst
}

pub fn conv_sweep(instances: usize, seed: u64) -> f64 {
    let mut worst: f64 = 0.0;
    for i in 0..instances {
        let mut rng = Rng::derive(seed, &[i as u64]);
        let (ci, co) = (rng.range_inclusive(1, 3), rng.range_inclusive(1, 3));
        let (t, f) = (rng.range_inclusive(1, 4), rng.range_inclusive(1, 5));
        let x = random_tensor(&[ci, t, f], &mut rng, 1.0);
        let k = random_tensor(&[co, ci, 3, 3], &mut rng, 1.0);
        let b = random_tensor(&[co], &mut rng, 1.0);
        let r = random_tensor(&[co, t, f], &mut rng, 1.0);
        let g = conv2d_backward(&x, &k, &r).unwrap();
        let obj = |x: &Tensor<f64>, k: &Tensor<f64>, b: &Tensor<f64>| dot(&conv2d_forward(x, k, b).unwrap(), &r);
        worst = worst
            .max(fd_max_rel_err(
                &mut |v| obj(&with(&[ci, t, f], v), &k, &b),
                x.data(),
                g.input.data(),
            ))
            .max(fd_max_rel_err(
                &mut |v| obj(&x, &with(&[co, ci, 3, 3], v), &b),
                k.data(),
                g.kernel.data(),
            ))
            .max(fd_max_rel_err(
                &mut |v| obj(&x, &k, &with(&[co], v)),
                b.data(),
                g.bias.data(),
            ));
    }
    worst
}

pub fn residual_sweep(instances: usize, seed: u64) -> f64 {
    let mut worst: f64 = 0.0;
    for i in 0..instances {
        let mut rng = Rng::derive(seed, &[i as u64]);
        let c = rng.range_inclusive(1, 3);
        let (t, f) = (rng.range_inclusive(1, 4), rng.range_inclusive(1, 4));
        let depth = rng.range_inclusive(1, 2);
        let x = random_tensor(&[c, t, f], &mut rng, 1.0);
        let inner: Vec<(Tensor<f64>, Tensor<f64>, Activation)> = (0..depth)
            .map(|j| {
                let act = if j + 1 == depth {
                    Activation::Linear
                } else {
                    Activation::Elu
                };
                (
                    random_tensor(&[c, c, 3, 3], &mut rng, 0.5),
                    random_tensor(&[c], &mut rng, 0.5),
                    act,
                )
            })
            .collect();
        let r = random_tensor(&[c, t, f], &mut rng, 1.0);
        let (dx, dparams) = residual_block_backward(&x, &inner, &r).unwrap();
        worst = worst.max(fd_max_rel_err(
            &mut |v| dot(&residual_block_forward(&with(&[c, t, f], v), &inner).unwrap(), &r),
            x.data(),
            dx.data(),
        ));
        for (j, (dk, db)) in dparams.iter().enumerate() {
            let mut probe = inner.clone();
            worst = worst.max(fd_max_rel_err(
                &mut |v| {
                    probe[j].0 = with(&[c, c, 3, 3], v);
                    dot(&residual_block_forward(&x, &probe).unwrap(), &r)
                },
                inner[j].0.data(),
                dk.data(),
            ));
            let mut probe = inner.clone();
            worst = worst.max(fd_max_rel_err(
                &mut |v| {
                    probe[j].1 = with(&[c], v);
                    dot(&residual_block_forward(&x, &probe).unwrap(), &r)
                },
                inner[j].1.data(),
                db.data(),
            ));
        }
    }
    worst
}

/// CTC loss with respect to the pre-softmax activations.
pub fn ctc_sweep(instances: usize, seed: u64) -> f64 {
    let mut worst: f64 = 0.0;
    for i in 0..instances {
        let mut rng = Rng::derive(seed, &[i as u64]);
        let k = rng.range_inclusive(2, 4);
        let blank = k - 1;
        let t = rng.range_inclusive(1, 6);
        let max_len = t.min(3);
        let len = rng.below(max_len + 1);
        let mut label: Vec<usize> = (0..len).map(|_| rng.below(blank)).collect();
        // keep the instance feasible: drop trailing symbols until it fits
        while rcnn_core::ctc::min_frames(&label) > t {
            label.pop();
        }
        let u = random_tensor(&[t, k], &mut rng, 2.0);
        let (_, grad) = ctc_loss_and_grad(&u, &label, blank).unwrap();
        worst = worst.max(fd_max_rel_err(
            &mut |v| ctc_loss_and_grad(&with(&[t, k], v), &label, blank).unwrap().0,
            u.data(),
            grad.data(),
        ));
    }
    worst
}

/// The same recurrent + residual-conv + dense stack, at most a few hundred
/// parameters, differentiated end to end through the CTC loss.
pub fn tiny_network_config(labels: usize) -> NetworkConfig {
    NetworkConfig::new(
        "tiny",
        vec![
            LayerSpec::recurrent(4),
            LayerSpec::conv(2),
            LayerSpec::conv(2),
            LayerSpec::Conv2d {
                feature_maps: 2,
                activation: Activation::Linear,
            },
            LayerSpec::Dense {
                units: 6,
                activation: Activation::Linear,
            },
            LayerSpec::Elu,
            LayerSpec::LinearOutput { units: labels },
        ],
    )
    .with_residual(2, 4)
}

pub fn network_sweep(instances: usize, seed: u64) -> (f64, usize) {
    let labels = 4;
    let blank = labels - 1;
    let input_dim = 3;
    let cfg = tiny_network_config(labels);
    let mut worst: f64 = 0.0;
    let mut params = 0;
    for i in 0..instances {
        let mut rng = Rng::derive(seed, &[i as u64]);
        let (net, store): (Network, ParameterStore<f64>) = Network::build(&cfg, input_dim, &mut rng).unwrap();
        params = store.num_params();
        // Glorot starts give tiny biases; randomise them so ELU kinks are exercised.
        let mut store = store;
        for (j, name) in store.names().map(str::to_string).collect::<Vec<_>>().iter().enumerate() {
            let id = store.id(name).unwrap();
            let shape = store.value(id).shape().to_vec();
            *store.value_mut(id) = random_tensor(&shape, &mut Rng::derive(seed, &[i as u64, j as u64]), 0.6);
        }
        let t = rng.range_inclusive(2, 4);
        let x = random_tensor(&[t, input_dim], &mut rng, 1.0);
        let len = rng.range_inclusive(1, 2);
        let label: Vec<usize> = (0..len).map(|_| rng.below(blank)).collect();
        if rcnn_core::ctc::min_frames(&label) > t {
            continue;
        }
        let (logits, cache) = net.forward(&store, &x, Mode::Infer).unwrap();
        let (_, g_logits) = ctc_loss_and_grad(&logits, &label, blank).unwrap();
        let mut grads = store.zero_gradients();
        let g_input = net.backward(&store, &cache, &g_logits, &mut grads).unwrap();

        let loss_of = |s: &ParameterStore<f64>, x: &Tensor<f64>| {
            let logits = net.infer(s, x).unwrap();
            ctc_loss_and_grad(&logits, &label, blank).unwrap().0
        };
        worst = worst.max(fd_max_rel_err(
            &mut |v| loss_of(&store, &with(&[t, input_dim], v)),
            x.data(),
            g_input.data(),
        ));
        let ids: Vec<_> = store.names().map(|n| store.id(n).unwrap()).collect();
        for id in ids {
            let shape = store.value(id).shape().to_vec();
            let base = store.value(id).data().to_vec();
            let analytic = grads.get(id).data().to_vec();
            let mut probe = store.clone();
            worst = worst.max(fd_max_rel_err(
                &mut |v| {
                    *probe.value_mut(id) = with(&shape, v);
                    loss_of(&probe, &x)
                },
                &base,
                &analytic,
            ));
        }
    }
    (worst, params)
}
