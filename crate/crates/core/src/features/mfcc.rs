use std::f64::consts::PI;
use std::sync::Arc;

use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};

use super::{
    AudioClip, FeaturesError, DELTA_WINDOW, FFT_SIZE, FRAME_LENGTH, FRAME_SHIFT, LOG_FLOOR, NUM_CEPSTRA, NUM_FILTERS,
    PRE_EMPHASIS,
};
use crate::numerics::{Scalar, Tensor};

pub fn hz_to_mel(hz: f64) -> f64 {
    2595.0 * (1.0 + hz / 700.0).log10()
}

pub fn mel_to_hz(mel: f64) -> f64 {
    700.0 * (10f64.powf(mel / 2595.0) - 1.0)
}

/// `y₀ = x₀`, `yₙ = xₙ − a·xₙ₋₁`.
pub fn pre_emphasis(samples: &[f64], coeff: f64) -> Vec<f64> {
    let mut out = Vec::with_capacity(samples.len());
    let mut prev = 0.0;
    for (i, &x) in samples.iter().enumerate() {
        out.push(if i == 0 { x } else { x - coeff * prev });
        prev = x;
    }
    out
}

pub fn hamming_window(n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![1.0];
    }
    (0..n)
        .map(|i| 0.54 - 0.46 * (2.0 * PI * i as f64 / (n - 1) as f64).cos())
        .collect()
}

/// Number of whole frames in `n` samples (0 when shorter than one frame).
pub fn frame_count(n: usize) -> usize {
    if n < FRAME_LENGTH {
        0
    } else {
        (n - FRAME_LENGTH) / FRAME_SHIFT + 1
    }
}

/// Splits the clip's samples into 400-sample frames every 160 samples,
/// dropping the trailing partial frame, and applies a Hamming window.
/// Pre-emphasis is not applied here; see [`MfccExtractor::extract`].
pub fn frame_and_window(clip: &AudioClip) -> Result<Vec<Vec<f64>>, FeaturesError> {
    window_frames(&clip.samples)
}

fn window_frames(samples: &[f64]) -> Result<Vec<Vec<f64>>, FeaturesError> {
    let n = frame_count(samples.len());
    if n == 0 {
        return Err(FeaturesError::ShortClip {
            samples: samples.len(),
            required: FRAME_LENGTH,
        });
    }
    let window = hamming_window(FRAME_LENGTH);
    Ok((0..n)
        .map(|f| {
            let start = f * FRAME_SHIFT;
            samples[start..start + FRAME_LENGTH]
                .iter()
                .zip(&window)
                .map(|(s, w)| s * w)
                .collect()
        })
        .collect())
}

/// Precomputed FFT plan, mel filterbank and DCT basis.
pub struct MfccExtractor {
    fft: Arc<dyn Fft<f64>>,
    sample_rate: u32,
    /// `NUM_FILTERS × (FFT_SIZE/2 + 1)` triangle weights.
    filterbank: Vec<Vec<f64>>,
    /// `NUM_CEPSTRA × NUM_FILTERS` orthonormal DCT-II rows.
    dct: Vec<Vec<f64>>,
}

impl std::fmt::Debug for MfccExtractor {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("MfccExtractor")
            .field("sample_rate", &self.sample_rate)
            .finish()
    }
}

impl MfccExtractor {
    pub fn new(sample_rate: u32) -> Result<Self, FeaturesError> {
        if sample_rate == 0 {
            return Err(FeaturesError::SampleRate(sample_rate));
        }
        let fft = FftPlanner::new().plan_fft_forward(FFT_SIZE);
        let bins = FFT_SIZE / 2 + 1;
        let nyquist = sample_rate as f64 / 2.0;
        let top = hz_to_mel(nyquist);
        let edges: Vec<f64> = (0..NUM_FILTERS + 2)
            .map(|i| mel_to_hz(top * i as f64 / (NUM_FILTERS + 1) as f64))
            .collect();
        let filterbank = (0..NUM_FILTERS)
            .map(|m| {
                let (lo, mid, hi) = (edges[m], edges[m + 1], edges[m + 2]);
                (0..bins)
                    .map(|k| {
                        let f = k as f64 * sample_rate as f64 / FFT_SIZE as f64;
                        if f <= lo || f >= hi {
                            0.0
                        } else if f <= mid {
                            (f - lo) / (mid - lo)
                        } else {
                            (hi - f) / (hi - mid)
                        }
                    })
                    .collect()
            })
            .collect();
        let n = NUM_FILTERS as f64;
        let dct = (0..NUM_CEPSTRA)
            .map(|k| {
                let norm = if k == 0 { (1.0 / n).sqrt() } else { (2.0 / n).sqrt() };
                (0..NUM_FILTERS)
                    .map(|j| norm * (PI * k as f64 * (j as f64 + 0.5) / n).cos())
                    .collect()
            })
            .collect();
        Ok(MfccExtractor {
            fft,
            sample_rate,
            filterbank,
            dct,
        })
    }

    pub fn sample_rate(&self) -> u32 {
        self.sample_rate
    }

    pub fn filterbank(&self) -> &[Vec<f64>] {
        &self.filterbank
    }

    /// `|X_k|² / FFT_SIZE` for `k = 0..=FFT_SIZE/2`, zero-padding the frame.
    pub fn power_spectrum(&self, frame: &[f64]) -> Vec<f64> {
        let mut buf: Vec<Complex<f64>> = frame
            .iter()
            .take(FFT_SIZE)
            .map(|&v| Complex::new(v, 0.0))
            .chain(std::iter::repeat(Complex::new(0.0, 0.0)))
            .take(FFT_SIZE)
            .collect();
        self.fft.process(&mut buf);
        buf[..FFT_SIZE / 2 + 1]
            .iter()
            .map(|c| c.norm_sqr() / FFT_SIZE as f64)
            .collect()
    }

    /// Filterbank energies of a power spectrum, before the log.
    pub fn mel_energies(&self, power: &[f64]) -> Vec<f64> {
        self.filterbank
            .iter()
            .map(|tri| tri.iter().zip(power).map(|(w, p)| w * p).sum())
            .collect()
    }

    /// 13 cepstral coefficients of one windowed frame, c0 = ln(frame energy).
    pub fn mfcc(&self, frame: &[f64]) -> Vec<f64> {
        let power = self.power_spectrum(frame);
        let log_mel: Vec<f64> = self
            .mel_energies(&power)
            .into_iter()
            .map(|e| e.max(LOG_FLOOR).ln())
            .collect();
        let mut c: Vec<f64> = self
            .dct
            .iter()
            .map(|row| row.iter().zip(&log_mel).map(|(a, b)| a * b).sum())
            .collect();
        let energy: f64 = power.iter().sum();
        c[0] = energy.max(LOG_FLOOR).ln();
        c
    }

    /// Full pipeline: `T × 39` features for one clip.
    pub fn extract(&self, clip: &AudioClip) -> Result<Tensor<f64>, FeaturesError> {
        if clip.sample_rate != self.sample_rate {
            return Err(FeaturesError::SampleRate(clip.sample_rate));
        }
        let emphasized = pre_emphasis(&clip.samples, PRE_EMPHASIS);
        let frames = window_frames(&emphasized)?;
        let rows: Vec<Vec<f64>> = frames.iter().map(|f| self.mfcc(f)).collect();
        let coeffs = Tensor::from_rows(&rows)?;
        deltas(&coeffs)
    }
}

fn regression<T: Scalar>(c: &Tensor<T>) -> Result<Tensor<T>, FeaturesError> {
    let (frames, width) = c.dims2()?;
    let n = DELTA_WINDOW as isize;
    let denom = T::lit(2.0 * (1..=DELTA_WINDOW).map(|i| (i * i) as f64).sum::<f64>());
    let mut out = Tensor::zeros(&[frames, width]);
    let clamp = |t: isize| t.clamp(0, frames as isize - 1) as usize;
    for t in 0..frames as isize {
        let row = out.row_mut(t as usize);
        for i in 1..=n {
            let (fwd, back) = (c.row(clamp(t + i)), c.row(clamp(t - i)));
            let w = T::lit(i as f64);
            for (o, (&a, &b)) in row.iter_mut().zip(fwd.iter().zip(back)) {
                *o += w * (a - b);
            }
        }
        for o in row.iter_mut() {
            *o /= denom;
        }
    }
    Ok(out)
}

/// Appends Δ and ΔΔ columns: `T × W` → `T × 3W`.
///
/// `Δc_t = Σₙ n·(c_{t+n} − c_{t−n}) / (2 Σₙ n²)` for `n = 1..=2`, with the
/// first and last frames replicated past the edges.
pub fn deltas<T: Scalar>(coeffs: &Tensor<T>) -> Result<Tensor<T>, FeaturesError> {
    let (frames, width) = coeffs.dims2()?;
    let d1 = regression(coeffs)?;
    let d2 = regression(&d1)?;
    let mut data = Vec::with_capacity(frames * width * 3);
    for t in 0..frames {
        data.extend_from_slice(coeffs.row(t));
        data.extend_from_slice(d1.row(t));
        data.extend_from_slice(d2.row(t));
    }
    Ok(Tensor::new(vec![frames, 3 * width], data)?)
}
