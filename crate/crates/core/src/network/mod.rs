//! Layers with hand-derived backward passes, the architecture description
//! format and the RC/CR/residual catalog.

mod catalog;
mod config;
pub mod layers;
mod model;

pub use catalog::{
    add_residual_runs, catalog, catalog_with_labels, CATALOG_NAMES, REFERENCE_CONV_PARAMS, TIMIT_LABELS,
};
pub use config::{Activation, LayerSpec, NetworkConfig, DEFAULT_DROPOUT, DEFAULT_HIDDEN_UNITS};
pub use layers::{conv2d_forward, dropout, elu, elu_backward, recurrent_forward};
pub use model::{
    layer_shapes, residual_block_backward, residual_block_forward, ActivationCache, Mode, Network, ELU_ALPHA,
};

use crate::numerics::{NumericsError, TensorError};

#[derive(Debug, thiserror::Error)]
pub enum NetworkError {
    #[error(transparent)]
    Tensor(#[from] TensorError),
    #[error(transparent)]
    Numerics(#[from] NumericsError),
    #[error("invalid network config {0}")]
    InvalidConfig(String),
    #[error("invalid residual span {0}")]
    InvalidResidual(String),
    #[error("residual shortcut {shortcut:?} does not match branch output {branch:?}")]
    ResidualShape { shortcut: Vec<usize>, branch: Vec<usize> },
    #[error("network expects input width {expected}, got {actual}")]
    InputWidth { expected: usize, actual: usize },
    #[error("config line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("unknown network `{0}`")]
    UnknownName(String),
}
