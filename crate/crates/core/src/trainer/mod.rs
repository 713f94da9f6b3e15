//! Mini-batch CTC training with cost-curve logging, checkpointing and a
//! harness that trains several architectures on identical data.

mod compare;
mod curve;
mod run;

pub use compare::{compare_architectures, Comparison};
pub use curve::{CostCurve, CurveRow, CURVE_HEADER};
pub use run::{
    decode, evaluate, posteriors, prepare, train, BatchRecord, DecodeOptions, Evaluation, Prepared, TrainOutcome,
    TrainedModel, NETWORK_FILE, STATS_FILE,
};

use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::corpus::CorpusError;
use crate::ctc::CtcError;
use crate::features::FeaturesError;
use crate::network::{catalog_with_labels, LayerSpec, NetworkConfig, NetworkError};
use crate::numerics::NumericsError;

/// Working precision of the parameters.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Precision {
    #[default]
    F64,
    F32,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    /// Catalog architecture name; ignored when `network_file` is set.
    pub network: String,
    /// Architecture in the text format of [`NetworkConfig::to_text`].
    pub network_file: Option<PathBuf>,
    pub lr: f64,
    pub batch_size: usize,
    pub epochs: usize,
    pub seed: u64,
    /// Overrides the rate of every dropout layer.
    pub dropout: Option<f64>,
    /// Write a checkpoint every this many epochs (the last epoch always gets
    /// one); 0 writes only the last.
    pub checkpoint_every: usize,
    /// Optional global-norm gradient clipping; off by default.
    pub clip_norm: Option<f64>,
    /// Batch log; defaults to `<out>/<model>_batches.log` when an output
    /// directory is given.
    pub log_path: Option<PathBuf>,
    pub precision: Precision,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            network: "RC2-toy".into(),
            network_file: None,
            lr: 5e-5,
            batch_size: 32,
            epochs: 10,
            seed: 0,
            dropout: None,
            checkpoint_every: 10,
            clip_norm: None,
            log_path: None,
            precision: Precision::F64,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<(), TrainError> {
        let fail = |m: String| Err(TrainError::Config(m));
        if !(self.lr >= 0.0 && self.lr.is_finite()) {
            return fail(format!("lr must be finite and non-negative, got {}", self.lr));
        }
        if self.batch_size == 0 {
            return fail("batch_size must be at least 1".into());
        }
        if let Some(r) = self.dropout {
            if !(0.0..1.0).contains(&r) {
                return fail(format!("dropout must lie in [0, 1), got {r}"));
            }
        }
        if let Some(c) = self.clip_norm {
            if c.is_nan() || c <= 0.0 {
                return fail(format!("clip_norm must be positive, got {c}"));
            }
        }
        Ok(())
    }

    pub fn from_toml(text: &str) -> Result<Self, TrainError> {
        let cfg: TrainConfig = toml::from_str(text).map_err(|e| TrainError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    /// The architecture to train, sized for `labels` outputs, with the
    /// dropout override applied.
    pub fn resolve_network(&self, labels: usize) -> Result<NetworkConfig, TrainError> {
        let mut cfg = match &self.network_file {
            Some(path) => {
                let text = std::fs::read_to_string(path)?;
                let cfg = NetworkConfig::parse(&text)?;
                if cfg.output_units() != Some(labels) {
                    return Err(TrainError::Config(format!(
                        "{}: output layer has {:?} units, the alphabet needs {labels}",
                        path.display(),
                        cfg.output_units()
                    )));
                }
                cfg
            }
            None => catalog_with_labels(&self.network, labels)
                .ok_or_else(|| TrainError::Config(format!("unknown architecture `{}`", self.network)))?,
        };
        if let Some(rate) = self.dropout {
            for layer in &mut cfg.layers {
                if let LayerSpec::Dropout { rate: r } = layer {
                    *r = rate;
                }
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Debug, thiserror::Error)]
pub enum TrainError {
    #[error("invalid training config: {0}")]
    Config(String),
    #[error("no CTC-feasible training utterances")]
    NoTrainingData,
    #[error("non-finite loss at epoch {epoch}, batch {batch} (utterance `{utterance}`)")]
    NonFiniteLoss {
        epoch: usize,
        batch: usize,
        utterance: String,
    },
    #[error("epoch {epoch}, batch {batch}: {source}")]
    Optimizer {
        epoch: usize,
        batch: usize,
        #[source]
        source: NumericsError,
    },
    #[error(transparent)]
    Network(#[from] NetworkError),
    #[error(transparent)]
    Ctc(#[from] CtcError),
    #[error(transparent)]
    Features(#[from] FeaturesError),
    #[error(transparent)]
    Corpus(#[from] CorpusError),
    #[error(transparent)]
    Numerics(#[from] NumericsError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl TrainError {
    /// True for aborts caused by the numbers rather than by inputs.
    pub fn is_numeric(&self) -> bool {
        matches!(
            self,
            TrainError::NonFiniteLoss { .. }
                | TrainError::Optimizer { .. }
                | TrainError::Numerics(NumericsError::NonFiniteGradient(_))
        )
    }
}
