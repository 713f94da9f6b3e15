use std::fmt;

use super::NetworkError;

/// Default recurrent width.
pub const DEFAULT_HIDDEN_UNITS: usize = 128;
/// Default dropout rate after recurrent layers and the first dense layer.
pub const DEFAULT_DROPOUT: f64 = 0.1;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Activation {
    Elu,
    Linear,
}

impl Activation {
    fn as_str(self) -> &'static str {
        match self {
            Activation::Elu => "elu",
            Activation::Linear => "linear",
        }
    }
}

/// One layer of a network description. Convolutions are always 3×3 with
/// stride 1 and one ring of zero padding, so they preserve `T×F`.
#[derive(Clone, Debug, PartialEq)]
pub enum LayerSpec {
    Recurrent {
        hidden_units: usize,
    },
    Conv2d {
        feature_maps: usize,
        activation: Activation,
    },
    Dense {
        units: usize,
        activation: Activation,
    },
    Elu,
    Dropout {
        rate: f64,
    },
    LinearOutput {
        units: usize,
    },
}

impl LayerSpec {
    pub fn kind(&self) -> &'static str {
        match self {
            LayerSpec::Recurrent { .. } => "recurrent",
            LayerSpec::Conv2d { .. } => "conv2d",
            LayerSpec::Dense { .. } => "dense",
            LayerSpec::Elu => "elu",
            LayerSpec::Dropout { .. } => "dropout",
            LayerSpec::LinearOutput { .. } => "linear_output",
        }
    }

    pub fn recurrent(hidden_units: usize) -> Self {
        LayerSpec::Recurrent { hidden_units }
    }

    pub fn conv(feature_maps: usize) -> Self {
        LayerSpec::Conv2d {
            feature_maps,
            activation: Activation::Elu,
        }
    }

    pub fn dense(units: usize) -> Self {
        LayerSpec::Dense {
            units,
            activation: Activation::Elu,
        }
    }

    pub fn dropout(rate: f64) -> Self {
        LayerSpec::Dropout { rate }
    }
}

impl fmt::Display for LayerSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LayerSpec::Recurrent { hidden_units } => write!(f, "recurrent units={hidden_units}"),
            LayerSpec::Conv2d {
                feature_maps,
                activation,
            } => write!(f, "conv2d maps={feature_maps} act={}", activation.as_str()),
            LayerSpec::Dense { units, activation } => {
                write!(f, "dense units={units} act={}", activation.as_str())
            }
            LayerSpec::Elu => write!(f, "elu"),
            LayerSpec::Dropout { rate } => write!(f, "dropout rate={rate}"),
            LayerSpec::LinearOutput { units } => write!(f, "linear_output units={units}"),
        }
    }
}

/// Declarative layer stack with optional identity-shortcut residual spans.
///
/// A residual span `start..end` wraps conv layers `start..end`; the block
/// computes `elu(x + F(x))` where `F` is the wrapped stack.
#[derive(Clone, Debug, PartialEq)]
pub struct NetworkConfig {
    pub name: String,
    pub layers: Vec<LayerSpec>,
    pub residual_groups: Vec<(usize, usize)>,
}

/// Shape of the activation flowing between layers.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) enum Flow {
    /// `T × width`
    Sequence(usize),
    /// `channels × T × features`
    Maps(usize, usize),
}

impl Flow {
    pub(crate) fn width(self) -> usize {
        match self {
            Flow::Sequence(w) => w,
            Flow::Maps(c, f) => c * f,
        }
    }

    pub(crate) fn channels(self) -> usize {
        match self {
            Flow::Sequence(_) => 1,
            Flow::Maps(c, _) => c,
        }
    }

    pub(crate) fn features(self) -> usize {
        match self {
            Flow::Sequence(w) => w,
            Flow::Maps(_, f) => f,
        }
    }
}

impl NetworkConfig {
    pub fn new(name: &str, layers: Vec<LayerSpec>) -> Self {
        NetworkConfig {
            name: name.to_string(),
            layers,
            residual_groups: Vec::new(),
        }
    }

    pub fn with_residual(mut self, start: usize, end: usize) -> Self {
        self.residual_groups.push((start, end));
        self
    }

    pub fn output_units(&self) -> Option<usize> {
        match self.layers.last() {
            Some(LayerSpec::LinearOutput { units }) => Some(*units),
            _ => None,
        }
    }

    /// Activation shape entering each layer, plus the final output shape.
    pub(crate) fn flows(&self, input_dim: usize) -> Vec<Flow> {
        let mut flows = Vec::with_capacity(self.layers.len() + 1);
        let mut cur = Flow::Sequence(input_dim);
        flows.push(cur);
        for layer in &self.layers {
            cur = match *layer {
                LayerSpec::Recurrent { hidden_units } => Flow::Sequence(hidden_units),
                LayerSpec::Dense { units, .. } | LayerSpec::LinearOutput { units } => Flow::Sequence(units),
                LayerSpec::Conv2d { feature_maps, .. } => Flow::Maps(feature_maps, cur.features()),
                LayerSpec::Elu | LayerSpec::Dropout { .. } => cur,
            };
            flows.push(cur);
        }
        flows
    }

    pub fn validate(&self) -> Result<(), NetworkError> {
        let bad = |msg: String| Err(NetworkError::InvalidConfig(format!("{}: {msg}", self.name)));
        if self.layers.is_empty() {
            return bad("no layers".into());
        }
        match self.layers.last() {
            Some(LayerSpec::LinearOutput { units }) if *units >= 2 => {}
            _ => return bad("final layer must be linear_output with at least 2 units".into()),
        }
        for (i, layer) in self.layers.iter().enumerate() {
            let ok = match *layer {
                LayerSpec::Recurrent { hidden_units } => hidden_units > 0,
                LayerSpec::Conv2d { feature_maps, .. } => feature_maps > 0,
                LayerSpec::Dense { units, .. } => units > 0,
                LayerSpec::Dropout { rate } => (0.0..1.0).contains(&rate),
                LayerSpec::LinearOutput { .. } => i + 1 == self.layers.len(),
                LayerSpec::Elu => true,
            };
            if !ok {
                return bad(format!("layer {i} `{layer}` is invalid"));
            }
        }
        let mut spans = self.residual_groups.clone();
        spans.sort_unstable();
        for w in spans.windows(2) {
            if w[0].1 > w[1].0 {
                return Err(NetworkError::InvalidResidual(format!(
                    "spans {}..{} and {}..{} overlap",
                    w[0].0, w[0].1, w[1].0, w[1].1
                )));
            }
        }
        let flows = self.flows(1);
        for &(start, end) in &spans {
            let span_err = |why: &str| Err(NetworkError::InvalidResidual(format!("{start}..{end}: {why}")));
            if start >= end || end > self.layers.len() {
                return span_err("empty or out of range");
            }
            if !self.layers[start..end]
                .iter()
                .all(|l| matches!(l, LayerSpec::Conv2d { .. }))
            {
                return span_err("residual spans may only wrap conv2d layers");
            }
            let c_in = flows[start].channels();
            let c_out = flows[end].channels();
            if c_in != c_out {
                return span_err(&format!("input has {c_in} feature maps, output has {c_out}"));
            }
        }
        Ok(())
    }

    /// Trainable scalar count for a given input width.
    pub fn param_count(&self, input_dim: usize) -> usize {
        let flows = self.flows(input_dim);
        self.layers
            .iter()
            .zip(&flows)
            .map(|(layer, flow)| match *layer {
                LayerSpec::Recurrent { hidden_units: h } => h * flow.width() + h * h + h,
                LayerSpec::Dense { units, .. } | LayerSpec::LinearOutput { units } => units * flow.width() + units,
                LayerSpec::Conv2d { feature_maps, .. } => feature_maps * flow.channels() * 9 + feature_maps,
                _ => 0,
            })
            .sum()
    }

    /// Parameters held by the convolutional stage only (independent of input width).
    pub fn conv_param_count(&self) -> usize {
        let flows = self.flows(1);
        self.layers
            .iter()
            .zip(&flows)
            .map(|(layer, flow)| match *layer {
                LayerSpec::Conv2d { feature_maps, .. } => feature_maps * flow.channels() * 9 + feature_maps,
                _ => 0,
            })
            .sum()
    }

    /// Structured text: `name <name>`, one `kind key=value …` line per layer,
    /// then `residual start..end` lines.
    pub fn to_text(&self) -> String {
        let mut s = format!("name {}\n", self.name);
        for layer in &self.layers {
            s.push_str(&layer.to_string());
            s.push('\n');
        }
        for (a, b) in &self.residual_groups {
            s.push_str(&format!("residual {a}..{b}\n"));
        }
        s
    }

    pub fn parse(text: &str) -> Result<Self, NetworkError> {
        let mut name = String::from("unnamed");
        let mut layers = Vec::new();
        let mut residual_groups = Vec::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let perr = |msg: String| NetworkError::Parse { line: lineno + 1, msg };
            let mut toks = line.split_whitespace();
            let kind = toks.next().unwrap_or_default();
            let rest: Vec<&str> = toks.collect();
            match kind {
                "name" => {
                    name = rest.join(" ");
                    continue;
                }
                "residual" => {
                    let span = rest.first().ok_or_else(|| perr("missing span".into()))?;
                    let (a, b) = span
                        .split_once("..")
                        .ok_or_else(|| perr(format!("bad span `{span}`")))?;
                    let a = a.parse().map_err(|_| perr(format!("bad span `{span}`")))?;
                    let b = b.parse().map_err(|_| perr(format!("bad span `{span}`")))?;
                    residual_groups.push((a, b));
                    continue;
                }
                _ => {}
            }
            let mut kv = std::collections::HashMap::new();
            for tok in &rest {
                let (k, v) = tok
                    .split_once('=')
                    .ok_or_else(|| perr(format!("expected key=value, got `{tok}`")))?;
                kv.insert(k, v);
            }
            let mut take_usize = |key: &str, default: Option<usize>| -> Result<usize, NetworkError> {
                match kv.remove(key) {
                    Some(v) => v.parse().map_err(|_| perr(format!("bad {key} `{v}`"))),
                    None => default.ok_or_else(|| perr(format!("missing {key}"))),
                }
            };
            let layer = match kind {
                "recurrent" => LayerSpec::Recurrent {
                    hidden_units: take_usize("units", Some(DEFAULT_HIDDEN_UNITS))?,
                },
                "conv2d" => LayerSpec::Conv2d {
                    feature_maps: take_usize("maps", None)?,
                    activation: Activation::Elu,
                },
                "dense" => LayerSpec::Dense {
                    units: take_usize("units", None)?,
                    activation: Activation::Elu,
                },
                "linear_output" => LayerSpec::LinearOutput {
                    units: take_usize("units", None)?,
                },
                "elu" => LayerSpec::Elu,
                "dropout" => {
                    let rate = match kv.remove("rate") {
                        Some(v) => v.parse().map_err(|_| perr(format!("bad rate `{v}`")))?,
                        None => DEFAULT_DROPOUT,
                    };
                    LayerSpec::Dropout { rate }
                }
                other => return Err(perr(format!("unknown layer kind `{other}`"))),
            };
            let layer = match (layer, kv.remove("act")) {
                (l, None) => l,
                (LayerSpec::Conv2d { feature_maps, .. }, Some(a)) => LayerSpec::Conv2d {
                    feature_maps,
                    activation: parse_activation(a).ok_or_else(|| perr(format!("bad act `{a}`")))?,
                },
                (LayerSpec::Dense { units, .. }, Some(a)) => LayerSpec::Dense {
                    units,
                    activation: parse_activation(a).ok_or_else(|| perr(format!("bad act `{a}`")))?,
                },
                (l, Some(_)) => return Err(perr(format!("`{}` takes no act", l.kind()))),
            };
            if let Some(k) = kv.keys().next() {
                return Err(perr(format!("unknown key `{k}` for {kind}")));
            }
            layers.push(layer);
        }
        let cfg = NetworkConfig {
            name,
            layers,
            residual_groups,
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

fn parse_activation(s: &str) -> Option<Activation> {
    match s {
        "elu" => Some(Activation::Elu),
        "linear" => Some(Activation::Linear),
        _ => None,
    }
}
