//! Bidirectional n-gram phoneme language model.
//!
//! Forward tables count left-to-right n-grams of orders 2–4 over sentences
//! padded with `N−1` start markers and one end marker; backward tables are
//! built identically from the fully reversed sentences. Each order uses
//! additive-k smoothing over the predicted vocabulary (symbols, `<unk>` and
//! `</s>`); the orders are linearly interpolated and the two directions are
//! mixed log-linearly with weight `mu` on the forward model.
//!
//! Rectification is n-best rescoring: among CTC beam hypotheses, pick the one
//! maximising `ctc_log_score + lambda · lm_score`.

mod ngram;
mod text;

pub use ngram::{rectify, rescore, Direction, NgramModel, Token, ORDERS};

/// Defaults for smoothing, per-order interpolation (N = 2, 3, 4) and the
/// forward/backward mix.
pub const DEFAULT_SMOOTHING: f64 = 1.0;
pub const DEFAULT_INTERPOLATION: [f64; 3] = [0.4, 0.35, 0.25];
pub const DEFAULT_MU: f64 = 0.5;

pub const START: &str = "<s>";
pub const END: &str = "</s>";
pub const UNKNOWN: &str = "<unk>";

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LmConfig {
    /// Additive smoothing constant `k > 0`.
    pub smoothing: f64,
    /// Interpolation weights for orders 2, 3, 4; non-negative, summing to 1.
    pub weights: [f64; 3],
    /// Weight of the forward direction in the log-linear mix, in `[0, 1]`.
    pub mu: f64,
}

impl Default for LmConfig {
    fn default() -> Self {
        LmConfig {
            smoothing: DEFAULT_SMOOTHING,
            weights: DEFAULT_INTERPOLATION,
            mu: DEFAULT_MU,
        }
    }
}

impl LmConfig {
    pub fn validate(&self) -> Result<(), LmError> {
        if !(self.smoothing > 0.0 && self.smoothing.is_finite()) {
            return Err(LmError::Config(format!(
                "smoothing k must be positive, got {}",
                self.smoothing
            )));
        }
        if self.weights.iter().any(|w| w.is_nan() || *w < 0.0) || (self.weights.iter().sum::<f64>() - 1.0).abs() > 1e-9
        {
            return Err(LmError::Config(format!(
                "interpolation weights must be non-negative and sum to 1, got {:?}",
                self.weights
            )));
        }
        if !(0.0..=1.0).contains(&self.mu) {
            return Err(LmError::Config(format!("mu must lie in [0, 1], got {}", self.mu)));
        }
        Ok(())
    }
}

#[derive(Debug, thiserror::Error)]
pub enum LmError {
    #[error("training corpus has no non-empty sentences")]
    EmptyCorpus,
    #[error("no hypotheses to rectify")]
    EmptyHypotheses,
    #[error("invalid LM configuration: {0}")]
    Config(String),
    #[error("symbol `{0}` collides with a reserved LM marker")]
    ReservedSymbol(String),
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
