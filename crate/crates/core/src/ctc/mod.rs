//! Connectionist temporal classification: scaled forward–backward, loss and
//! gradient, best-path and prefix beam decoding.
//!
//! Blank is always the last label index.

mod alphabet;
mod decode;
mod trellis;

pub use alphabet::{Alphabet, PhonemeSequence, TIMIT_PHONES};
pub use decode::{
    beam_decode, collapse, format_hypothesis_line, greedy_decode, parse_hypothesis_line, Hypothesis, PrefixScorer,
};
pub use trellis::{
    ctc_forward, ctc_loss_and_grad, ctc_posterior_check, extend_label, min_frames, softmax_rows, CtcTrellis,
};

use crate::numerics::TensorError;

/// Default prefix beam width.
pub const DEFAULT_BEAM_WIDTH: usize = 16;
/// Default language-model fusion weight.
pub const DEFAULT_LM_WEIGHT: f64 = 0.3;

#[derive(Debug, thiserror::Error)]
pub enum CtcError {
    #[error(transparent)]
    Tensor(#[from] TensorError),
    #[error("infeasible label length: {label_len} labels need {required} frames, got {frames}")]
    Infeasible {
        frames: usize,
        label_len: usize,
        required: usize,
    },
    #[error("label {label} is not a non-blank index (blank = {blank}, {num_labels} labels)")]
    BadLabel {
        label: usize,
        blank: usize,
        num_labels: usize,
    },
    #[error("blank index {blank} outside {num_labels} labels")]
    BlankOutOfRange { blank: usize, num_labels: usize },
    #[error("row {frame} is not a probability distribution (sum {sum})")]
    NotStochastic { frame: usize, sum: f64 },
    #[error("beam width must be at least 1, got {0}")]
    BeamWidth(usize),
    #[error("alphabet is empty")]
    EmptyAlphabet,
    #[error("duplicate symbol `{0}`")]
    DuplicateSymbol(String),
    #[error("invalid symbol `{0}`")]
    BadSymbol(String),
    #[error("unknown symbol `{0}`")]
    UnknownSymbol(String),
    #[error("empty hypothesis line")]
    EmptyLine,
}
