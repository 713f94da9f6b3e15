//! Named architectures.
//!
//! RC nets put recurrent layers first and a deep 3×3 conv stack on top; CR
//! nets do the reverse. Both end in a dense ELU layer and a linear output.
//! RC1–RC4 use fixed layer schedules. CR1–CR4, RC5 and RC6 are
//! representative schedules whose conv-stage parameter counts sit within 15%
//! of the reference sizes (19k/22k/26k/18k and 15k).
//!
//! The `-toy` entries are scaled-down analogues for CPU experiments.

use super::config::{Activation, LayerSpec, NetworkConfig, DEFAULT_DROPOUT, DEFAULT_HIDDEN_UNITS};

/// Output width for the 61-phone alphabet plus blank.
pub const TIMIT_LABELS: usize = 62;
const DENSE_UNITS: usize = 256;

pub const CATALOG_NAMES: [&str; 16] = [
    "RC1",
    "RC2",
    "RC3",
    "RC4",
    "RC5",
    "RC6",
    "CR1",
    "CR2",
    "CR3",
    "CR4",
    "Res-RC2",
    "Res-CR2",
    "RC2-toy",
    "CR2-toy",
    "Res-RC2-toy",
    "Res-CR2-toy",
];

/// Reference conv-stage sizes the representative schedules are matched to.
pub const REFERENCE_CONV_PARAMS: [(&str, usize); 6] = [
    ("CR1", 19_000),
    ("CR2", 22_000),
    ("CR3", 26_000),
    ("CR4", 18_000),
    ("RC5", 15_000),
    ("RC6", 15_000),
];

const RC1_MAPS: [usize; 12] = [24, 24, 48, 48, 24, 24, 12, 12, 6, 6, 3, 3];
const RC2_MAPS: [usize; 12] = [16, 16, 16, 16, 16, 16, 8, 8, 4, 4, 2, 2];

fn run(maps: usize, n: usize) -> Vec<usize> {
    vec![maps; n]
}

fn concat(parts: &[Vec<usize>]) -> Vec<usize> {
    parts.concat()
}

struct Shape {
    hidden: usize,
    dense: usize,
    labels: usize,
    dropout: f64,
}

fn recurrent_block(n: usize, s: &Shape) -> Vec<LayerSpec> {
    (0..n)
        .flat_map(|_| [LayerSpec::recurrent(s.hidden), LayerSpec::dropout(s.dropout)])
        .collect()
}

fn head(s: &Shape) -> Vec<LayerSpec> {
    vec![
        LayerSpec::dense(s.dense),
        LayerSpec::dropout(s.dropout),
        LayerSpec::LinearOutput { units: s.labels },
    ]
}

fn rc(name: &str, recurrent: usize, maps: &[usize], s: &Shape) -> NetworkConfig {
    let mut layers = recurrent_block(recurrent, s);
    layers.extend(maps.iter().map(|&m| LayerSpec::conv(m)));
    layers.extend(head(s));
    NetworkConfig::new(name, layers)
}

fn cr(name: &str, maps: &[usize], recurrent: usize, s: &Shape) -> NetworkConfig {
    let mut layers: Vec<LayerSpec> = maps.iter().map(|&m| LayerSpec::conv(m)).collect();
    layers.extend(recurrent_block(recurrent, s));
    layers.extend(head(s));
    NetworkConfig::new(name, layers)
}

/// Wraps every run of equal-width conv layers in an identity-shortcut span.
///
/// A run's first layer is left outside the span when its input width differs
/// (the shortcut has no projection). The last conv inside each span is made
/// linear so the block computes `elu(x + F(x))`.
pub fn add_residual_runs(mut cfg: NetworkConfig, name: &str) -> NetworkConfig {
    cfg.name = name.to_string();
    let flows = cfg.flows(1);
    let mut spans = Vec::new();
    let mut i = 0;
    while i < cfg.layers.len() {
        let LayerSpec::Conv2d { feature_maps, .. } = cfg.layers[i] else {
            i += 1;
            continue;
        };
        let mut end = i + 1;
        while matches!(cfg.layers.get(end), Some(LayerSpec::Conv2d { feature_maps: m, .. }) if *m == feature_maps) {
            end += 1;
        }
        let start = if flows[i].channels() == feature_maps { i } else { i + 1 };
        if start < end {
            spans.push((start, end));
        }
        i = end;
    }
    for &(_, end) in &spans {
        if let LayerSpec::Conv2d { activation, .. } = &mut cfg.layers[end - 1] {
            *activation = Activation::Linear;
        }
    }
    cfg.residual_groups = spans;
    cfg
}

/// Catalog entry with the 62-label TIMIT output layer.
pub fn catalog(name: &str) -> Option<NetworkConfig> {
    catalog_with_labels(name, TIMIT_LABELS)
}

/// Catalog entry with `labels` output units (non-blank symbols + 1).
pub fn catalog_with_labels(name: &str, labels: usize) -> Option<NetworkConfig> {
    let full = Shape {
        hidden: DEFAULT_HIDDEN_UNITS,
        dense: DENSE_UNITS,
        labels,
        dropout: DEFAULT_DROPOUT,
    };
    let toy = Shape {
        hidden: 32,
        dense: 64,
        labels,
        dropout: DEFAULT_DROPOUT,
    };
    let cr1 = concat(&[run(13, 11), run(8, 3)]);
    let cr2 = concat(&[run(14, 11), run(8, 3)]);
    let cr3 = vec![32, 32, 32, 16, 16, 8, 8, 4, 4];
    let cr4 = vec![24, 24, 16, 16, 16, 8, 8, 8, 4, 4];
    let rc_toy = [4, 4, 4, 2, 2];
    let cr_toy = [4, 4, 4, 2, 2];
    let cfg = match name {
        "RC1" => rc(name, 4, &RC1_MAPS, &full),
        "RC2" => rc(name, 4, &RC2_MAPS, &full),
        "RC3" => rc(name, 2, &RC1_MAPS, &full),
        "RC4" => rc(name, 2, &RC2_MAPS, &full),
        "RC5" => rc(name, 2, &run(8, 26), &full),
        "RC6" => rc(name, 2, &run(12, 13), &full),
        "CR1" => cr(name, &cr1, 4, &full),
        "CR2" => cr(name, &cr2, 4, &full),
        "CR3" => cr(name, &cr3, 4, &full),
        "CR4" => cr(name, &cr4, 4, &full),
        "Res-RC2" => add_residual_runs(rc("RC2", 4, &RC2_MAPS, &full), name),
        "Res-CR2" => add_residual_runs(cr("CR2", &cr2, 4, &full), name),
        "RC2-toy" => rc(name, 1, &rc_toy, &toy),
        "CR2-toy" => cr(name, &cr_toy, 1, &toy),
        "Res-RC2-toy" => add_residual_runs(rc(name, 1, &rc_toy, &toy), name),
        "Res-CR2-toy" => add_residual_runs(cr(name, &cr_toy, 1, &toy), name),
        _ => return None,
    };
    debug_assert!(cfg.validate().is_ok(), "{name}");
    Some(cfg)
}
