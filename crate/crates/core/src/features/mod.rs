//! 39-dimensional MFCC features from 16 kHz mono audio.
//!
//! Pipeline: pre-emphasis (0.97) → 25 ms Hamming frames every 10 ms → 512-point
//! power spectrum → 26 mel triangles over 0–8 kHz → natural log (floored at
//! 1e-10) → orthonormal DCT-II, keeping c0..c12. **c0 is replaced by the log
//! frame energy** (sum of the power spectrum), which is how the "log energy
//! coefficients" are read here. Δ and ΔΔ (regression window 2, edge
//! replication) complete the 39 columns.

mod io;
mod mfcc;
mod normalize;

pub use io::{format_feature_dump, load_feature_dump, parse_feature_dump, read_wav, save_feature_dump, write_wav};
pub use mfcc::{
    deltas, frame_and_window, frame_count, hamming_window, hz_to_mel, mel_to_hz, pre_emphasis, MfccExtractor,
};
pub use normalize::{normalize_corpus, pad_to_length, unpad, NormStats};

use crate::numerics::TensorError;

pub const SAMPLE_RATE: u32 = 16_000;
/// 25 ms at 16 kHz.
pub const FRAME_LENGTH: usize = 400;
/// 10 ms at 16 kHz.
pub const FRAME_SHIFT: usize = 160;
pub const FFT_SIZE: usize = 512;
pub const NUM_FILTERS: usize = 26;
pub const NUM_CEPSTRA: usize = 13;
pub const FEATURE_DIM: usize = 3 * NUM_CEPSTRA;
pub const PRE_EMPHASIS: f64 = 0.97;
pub const LOG_FLOOR: f64 = 1e-10;
pub const DELTA_WINDOW: usize = 2;

/// Raw mono audio.
#[derive(Clone, Debug, PartialEq)]
pub struct AudioClip {
    pub samples: Vec<f64>,
    pub sample_rate: u32,
}

impl AudioClip {
    pub fn new(samples: Vec<f64>, sample_rate: u32) -> Result<Self, FeaturesError> {
        if sample_rate == 0 {
            return Err(FeaturesError::SampleRate(0));
        }
        if samples.len() < FRAME_LENGTH {
            return Err(FeaturesError::ShortClip {
                samples: samples.len(),
                required: FRAME_LENGTH,
            });
        }
        Ok(AudioClip { samples, sample_rate })
    }

    pub fn duration_seconds(&self) -> f64 {
        self.samples.len() as f64 / self.sample_rate as f64
    }
}

#[derive(Debug, thiserror::Error)]
pub enum FeaturesError {
    #[error("clip has {samples} samples, one frame needs {required}")]
    ShortClip { samples: usize, required: usize },
    #[error("unsupported sample rate {0} Hz (expected 16000)")]
    SampleRate(u32),
    #[error("unsupported WAV format: {0}")]
    WavFormat(String),
    #[error(transparent)]
    Wav(#[from] hound::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("feature matrix has {actual} columns, expected {expected}")]
    Width { expected: usize, actual: usize },
    #[error("cannot pad {len} frames to {target}")]
    PadTooShort { len: usize, target: usize },
    #[error("no feature matrices to normalize")]
    EmptyCorpus,
    #[error(transparent)]
    Tensor(#[from] TensorError),
}
