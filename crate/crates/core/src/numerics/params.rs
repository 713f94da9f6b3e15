use indexmap::IndexMap;

use super::{NumericsError, Rng, Scalar, Tensor, TensorError};

/// Adam hyper-parameters.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AdamConfig {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        AdamConfig {
            lr: 5e-5,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

impl AdamConfig {
    pub fn with_lr(lr: f64) -> Self {
        AdamConfig { lr, ..Self::default() }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Parameter<T> {
    pub value: Tensor<T>,
    pub gradient: Tensor<T>,
    pub adam_m: Tensor<T>,
    pub adam_v: Tensor<T>,
}

impl<T: Scalar> Parameter<T> {
    fn new(value: Tensor<T>) -> Self {
        let zeros = Tensor::zeros(value.shape());
        Parameter {
            gradient: zeros.clone(),
            adam_m: zeros.clone(),
            adam_v: zeros,
            value,
        }
    }
}

/// Named trainable tensors with their gradients and Adam moments.
///
/// Entry order is insertion order; it fixes the checkpoint layout and the
/// order in which per-utterance gradients are reduced.
#[derive(Clone, Debug, PartialEq)]
pub struct ParameterStore<T> {
    entries: IndexMap<String, Parameter<T>>,
    step_count: u64,
}

impl<T: Scalar> Default for ParameterStore<T> {
    fn default() -> Self {
        ParameterStore {
            entries: IndexMap::new(),
            step_count: 0,
        }
    }
}

/// Gradient buffers aligned index-for-index with a [`ParameterStore`].
#[derive(Clone, Debug, PartialEq)]
pub struct Gradients<T> {
    pub tensors: Vec<Tensor<T>>,
}

impl<T: Scalar> Gradients<T> {
    pub fn get_mut(&mut self, id: ParamId) -> &mut Tensor<T> {
        &mut self.tensors[id.0]
    }

    pub fn get(&self, id: ParamId) -> &Tensor<T> {
        &self.tensors[id.0]
    }

    pub fn add_assign(&mut self, other: &Gradients<T>) -> Result<(), TensorError> {
        for (a, b) in self.tensors.iter_mut().zip(&other.tensors) {
            a.add_assign(b)?;
        }
        Ok(())
    }

    pub fn scale(&mut self, k: T) {
        for t in &mut self.tensors {
            t.data_mut().iter_mut().for_each(|x| *x *= k);
        }
    }

    pub fn global_norm(&self) -> T {
        self.tensors
            .iter()
            .flat_map(|t| t.data().iter())
            .map(|&x| x * x)
            .sum::<T>()
            .sqrt()
    }
}

/// Index of an entry inside a [`ParameterStore`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct ParamId(pub usize);

impl<T: Scalar> ParameterStore<T> {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, name: &str, value: Tensor<T>) -> Result<ParamId, NumericsError> {
        if self.entries.contains_key(name) {
            return Err(NumericsError::DuplicateName(name.to_string()));
        }
        let (idx, _) = self.entries.insert_full(name.to_string(), Parameter::new(value));
        Ok(ParamId(idx))
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn step_count(&self) -> u64 {
        self.step_count
    }

    pub fn id(&self, name: &str) -> Option<ParamId> {
        self.entries.get_index_of(name).map(ParamId)
    }

    pub fn value(&self, id: ParamId) -> &Tensor<T> {
        &self.entries[id.0].value
    }

    pub fn value_mut(&mut self, id: ParamId) -> &mut Tensor<T> {
        &mut self.entries[id.0].value
    }

    pub fn get(&self, name: &str) -> Option<&Parameter<T>> {
        self.entries.get(name)
    }

    pub fn get_mut(&mut self, name: &str) -> Option<&mut Parameter<T>> {
        self.entries.get_mut(name)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &Parameter<T>)> {
        self.entries.iter().map(|(k, v)| (k.as_str(), v))
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.entries.keys().map(String::as_str)
    }

    /// Total number of scalar parameters.
    pub fn num_params(&self) -> usize {
        self.entries.values().map(|p| p.value.len()).sum()
    }

    /// Fresh zeroed gradient buffers shaped like the store.
    pub fn zero_gradients(&self) -> Gradients<T> {
        Gradients {
            tensors: self.entries.values().map(|p| Tensor::zeros(p.value.shape())).collect(),
        }
    }

    pub fn set_gradients(&mut self, grads: &Gradients<T>) -> Result<(), TensorError> {
        for (p, g) in self.entries.values_mut().zip(&grads.tensors) {
            if p.gradient.shape() != g.shape() {
                return Err(TensorError::ShapeMismatch {
                    op: "set_gradients",
                    left: p.gradient.shape().to_vec(),
                    right: g.shape().to_vec(),
                });
            }
            p.gradient.data_mut().copy_from_slice(g.data());
        }
        Ok(())
    }

    pub fn clear_gradients(&mut self) {
        for p in self.entries.values_mut() {
            p.gradient.fill(T::zero());
        }
    }

    /// One bias-corrected Adam update of every entry from its stored
    /// gradient, then zeroes the gradients.
    ///
    /// A non-finite gradient aborts before any value is touched.
    pub fn adam_step(&mut self, cfg: &AdamConfig) -> Result<(), NumericsError> {
        for (name, p) in &self.entries {
            if p.gradient.check_finite().is_err() {
                return Err(NumericsError::NonFiniteGradient(name.clone()));
            }
        }
        self.step_count += 1;
        let t = self.step_count as i32;
        let lr = T::lit(cfg.lr);
        let b1 = T::lit(cfg.beta1);
        let b2 = T::lit(cfg.beta2);
        let eps = T::lit(cfg.eps);
        let one = T::one();
        let bc1 = one - b1.powi(t);
        let bc2 = one - b2.powi(t);
        for p in self.entries.values_mut() {
            let Parameter {
                value,
                gradient,
                adam_m,
                adam_v,
            } = p;
            for (((w, g), m), v) in value
                .data_mut()
                .iter_mut()
                .zip(gradient.data_mut().iter_mut())
                .zip(adam_m.data_mut().iter_mut())
                .zip(adam_v.data_mut().iter_mut())
            {
                *m = b1 * *m + (one - b1) * *g;
                *v = b2 * *v + (one - b2) * *g * *g;
                let m_hat = *m / bc1;
                let v_hat = *v / bc2;
                *w -= lr * m_hat / (v_hat.sqrt() + eps);
                *g = T::zero();
            }
        }
        Ok(())
    }
}

/// Glorot-uniform draw in `±sqrt(6 / (fan_in + fan_out))`.
///
/// `shape[0]` is the output dimension, `shape[1]` the input dimension and any
/// trailing dimensions form the receptive field (conv kernels).
pub fn glorot_init<T: Scalar>(shape: &[usize], rng: &mut Rng) -> Result<Tensor<T>, NumericsError> {
    if shape.is_empty() || shape.contains(&0) {
        return Err(NumericsError::Tensor(TensorError::ZeroDim(shape.to_vec())));
    }
    let (fan_in, fan_out) = match shape {
        [n] => (*n, *n),
        [out, inp, rest @ ..] => {
            let field: usize = rest.iter().product();
            (inp * field, out * field)
        }
        [] => unreachable!(),
    };
    let bound = T::lit((6.0 / (fan_in + fan_out) as f64).sqrt());
    let n: usize = shape.iter().product();
    let data = (0..n).map(|_| rng.uniform(-bound, bound)).collect();
    Ok(Tensor::new(shape.to_vec(), data)?)
}
