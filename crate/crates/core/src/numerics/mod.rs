//! Dense tensors, parameter storage, seeded randomness, Adam and checkpoints.

mod checkpoint;
mod params;
mod rng;
mod scalar;
mod tensor;

pub use checkpoint::{Checkpoint, StoredTensor, MAGIC};
pub use params::{glorot_init, AdamConfig, Gradients, ParamId, Parameter, ParameterStore};
pub use rng::Rng;
pub use scalar::{DType, Scalar};
pub use tensor::{Tensor, TensorError};

#[derive(Debug, thiserror::Error)]
pub enum NumericsError {
    #[error(transparent)]
    Tensor(#[from] TensorError),
    #[error("non-finite gradient in parameter `{0}`")]
    NonFiniteGradient(String),
    #[error("duplicate parameter name `{0}`")]
    DuplicateName(String),
    #[error("unknown parameter `{0}`")]
    UnknownName(String),
    #[error("checkpoint holds {actual} entries, network expects {expected}")]
    EntryCount { expected: usize, actual: usize },
    #[error("not a checkpoint: bad magic bytes")]
    BadMagic,
    #[error("checkpoint truncated at byte {0}")]
    Truncated(usize),
    #[error("invalid UTF-8 parameter name near byte {0}")]
    BadName(usize),
    #[error("unknown dtype code {0}")]
    BadDtype(u8),
    #[error("{0} trailing bytes after last checkpoint entry")]
    TrailingBytes(usize),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
