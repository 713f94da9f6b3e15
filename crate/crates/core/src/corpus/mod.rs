//! Utterances, train/validation/test partitions, corpus directories and the
//! synthetic phoneme corpus used in place of TIMIT.

mod io;
mod partition;
mod synthetic;

pub use io::{load_corpus, write_corpus, ALPHABET_FILE};
pub use partition::{choose_partition, make_partitions, select_partition, Partition, SplitSizes};
pub use synthetic::{generate_synthetic, SyntheticSpec};

use std::collections::HashMap;

use crate::ctc::{min_frames, Alphabet, PhonemeSequence};
use crate::features::FeaturesError;
use crate::numerics::Tensor;

#[derive(Clone, Debug, PartialEq)]
pub struct Utterance {
    pub id: String,
    /// `T × 39` features (not yet normalized).
    pub features: Tensor<f64>,
    pub labels: PhonemeSequence,
    /// Whether `T` frames can carry `labels` under CTC.
    pub feasible: bool,
}

impl Utterance {
    pub fn new(id: impl Into<String>, features: Tensor<f64>, labels: PhonemeSequence) -> Self {
        let frames = features.shape().first().copied().unwrap_or(0);
        let feasible = !labels.is_empty() && min_frames(&labels) <= frames;
        Utterance {
            id: id.into(),
            features,
            labels,
            feasible,
        }
    }

    pub fn frames(&self) -> usize {
        self.features.shape()[0]
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Corpus {
    pub alphabet: Alphabet,
    pub utterances: Vec<Utterance>,
}

impl Corpus {
    pub fn new(alphabet: Alphabet, utterances: Vec<Utterance>) -> Self {
        Corpus { alphabet, utterances }
    }

    pub fn len(&self) -> usize {
        self.utterances.len()
    }

    pub fn is_empty(&self) -> bool {
        self.utterances.is_empty()
    }

    pub fn ids(&self) -> Vec<String> {
        self.utterances.iter().map(|u| u.id.clone()).collect()
    }

    pub fn get(&self, id: &str) -> Option<&Utterance> {
        self.utterances.iter().find(|u| u.id == id)
    }

    /// Looks up each id, failing on the first unknown one.
    pub fn select(&self, ids: &[String]) -> Result<Vec<&Utterance>, CorpusError> {
        let index: HashMap<&str, &Utterance> = self.utterances.iter().map(|u| (u.id.as_str(), u)).collect();
        ids.iter()
            .map(|id| {
                index
                    .get(id.as_str())
                    .copied()
                    .ok_or_else(|| CorpusError::UnknownId(id.clone()))
            })
            .collect()
    }
}

#[derive(Debug, thiserror::Error)]
pub enum CorpusError {
    #[error("corpus has {available} utterances, the split needs at least {required}")]
    TooSmall { available: usize, required: usize },
    #[error("partition is not an exact cover: {0}")]
    NotACover(String),
    #[error("no partitions to choose from")]
    NoPartitions,
    #[error("training diverged on every partition")]
    AllDiverged,
    #[error("audio `{0}` has no transcript")]
    MissingTranscript(String),
    #[error("{file}: line {line}: {msg}")]
    Parse { file: String, line: usize, msg: String },
    #[error("{file}: unknown phoneme symbol `{symbol}`")]
    UnknownSymbol { file: String, symbol: String },
    #[error("unknown utterance id `{0}`")]
    UnknownId(String),
    #[error("invalid synthetic spec: {0}")]
    Spec(String),
    #[error("{path}: {source}")]
    Features {
        path: String,
        #[source]
        source: FeaturesError,
    },
    #[error(transparent)]
    Alphabet(#[from] crate::ctc::CtcError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
