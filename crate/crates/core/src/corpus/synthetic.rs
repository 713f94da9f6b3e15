use serde::{Deserialize, Serialize};

use super::{Corpus, CorpusError, Utterance};
use crate::ctc::{Alphabet, PhonemeSequence};
use crate::numerics::{Rng, Tensor};

const MEANS_TAG: u64 = 0x6d65616e;
const TRANSITIONS_TAG: u64 = 0x7472616e;
/// Spread of the log transition weights; larger values make the bigram peakier.
const TRANSITION_SHARPNESS: f64 = 1.5;

/// Generator for a synthetic phoneme corpus. Ground-truth emission means and
/// the transition bigram are drawn from `structure_seed`, so a spec file fully
/// determines the hidden structure; utterance sampling uses a separate seed.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SyntheticSpec {
    pub n_phonemes: usize,
    pub feature_dim: usize,
    /// Frames per phoneme, drawn uniformly from `min_duration..=max_duration`.
    pub min_duration: usize,
    pub max_duration: usize,
    /// Shared emission standard deviation.
    pub sigma: f64,
    /// Standard deviation of the emission means around 0.
    pub mean_spread: f64,
    /// Phonemes per sentence, uniform in `min_length..=max_length`.
    pub min_length: usize,
    pub max_length: usize,
    pub structure_seed: u64,
}

impl Default for SyntheticSpec {
    fn default() -> Self {
        SyntheticSpec {
            n_phonemes: 10,
            feature_dim: crate::features::FEATURE_DIM,
            min_duration: 3,
            max_duration: 8,
            sigma: 1.0,
            mean_spread: 1.0,
            min_length: 4,
            max_length: 8,
            structure_seed: 0,
        }
    }
}

impl SyntheticSpec {
    pub fn validate(&self) -> Result<(), CorpusError> {
        let fail = |m: String| Err(CorpusError::Spec(m));
        if self.n_phonemes < 2 {
            return fail(format!("need at least 2 phonemes, got {}", self.n_phonemes));
        }
        if self.feature_dim == 0 {
            return fail("feature_dim must be positive".into());
        }
        if self.min_duration == 0 || self.min_duration > self.max_duration {
            return fail(format!(
                "bad duration range {}..={}",
                self.min_duration, self.max_duration
            ));
        }
        if self.min_length == 0 || self.min_length > self.max_length {
            return fail(format!(
                "bad sentence length range {}..={}",
                self.min_length, self.max_length
            ));
        }
        if !(self.sigma >= 0.0 && self.sigma.is_finite()) {
            return fail(format!("sigma must be finite and non-negative, got {}", self.sigma));
        }
        if !(self.mean_spread > 0.0 && self.mean_spread.is_finite()) {
            return fail(format!("mean_spread must be positive, got {}", self.mean_spread));
        }
        let means = self.means();
        for i in 0..means.len() {
            for j in 0..i {
                if means[i] == means[j] {
                    return fail(format!("phonemes {j} and {i} share an emission mean"));
                }
            }
        }
        Ok(())
    }

    pub fn alphabet(&self) -> Alphabet {
        Alphabet::synthetic(self.n_phonemes)
    }

    /// Per-phoneme emission means, `N(0, mean_spread²)` per dimension.
    pub fn means(&self) -> Vec<Vec<f64>> {
        let mut rng = Rng::derive(self.structure_seed, &[MEANS_TAG]);
        (0..self.n_phonemes)
            .map(|_| (0..self.feature_dim).map(|_| self.mean_spread * rng.normal()).collect())
            .collect()
    }

    /// Row-stochastic bigram `P(next | current)` with no self-transitions, so
    /// every sentence is free of immediate repeats.
    pub fn transitions(&self) -> Vec<Vec<f64>> {
        let mut rng = Rng::derive(self.structure_seed, &[TRANSITIONS_TAG]);
        (0..self.n_phonemes)
            .map(|i| {
                let raw: Vec<f64> = (0..self.n_phonemes)
                    .map(|j| {
                        let w = (TRANSITION_SHARPNESS * rng.normal()).exp();
                        if i == j {
                            0.0
                        } else {
                            w
                        }
                    })
                    .collect();
                let total: f64 = raw.iter().sum();
                raw.into_iter().map(|w| w / total).collect()
            })
            .collect()
    }

    /// One sentence: uniform first phoneme, then bigram transitions.
    pub fn sample_sentence(&self, transitions: &[Vec<f64>], rng: &mut Rng) -> PhonemeSequence {
        let len = rng.range_inclusive(self.min_length, self.max_length);
        let mut seq = Vec::with_capacity(len);
        seq.push(rng.below(self.n_phonemes));
        while seq.len() < len {
            let prev = *seq.last().expect("non-empty");
            seq.push(rng.categorical(&transitions[prev]));
        }
        seq
    }
}

/// Draws `n` utterances with ids `syn00000, syn00001, …`.
pub fn generate_synthetic(spec: &SyntheticSpec, n: usize, rng: &mut Rng) -> Result<Corpus, CorpusError> {
    spec.validate()?;
    let means = spec.means();
    let transitions = spec.transitions();
    let mut utterances = Vec::with_capacity(n);
    for i in 0..n {
        let labels = spec.sample_sentence(&transitions, rng);
        let mut data = Vec::new();
        let mut frames = 0;
        for &p in &labels {
            let dur = rng.range_inclusive(spec.min_duration, spec.max_duration);
            for _ in 0..dur {
                data.extend(means[p].iter().map(|&m| m + spec.sigma * rng.normal()));
            }
            frames += dur;
        }
        let features = Tensor::new(vec![frames, spec.feature_dim], data).expect("frame data sized by construction");
        utterances.push(Utterance::new(format!("syn{i:05}"), features, labels));
    }
    Ok(Corpus::new(spec.alphabet(), utterances))
}
