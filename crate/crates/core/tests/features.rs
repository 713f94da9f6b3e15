//! MFCC pipeline against naive transforms and closed-form expectations.

use std::f64::consts::PI;

use rcnn_core::features::{
    deltas, frame_and_window, hamming_window, hz_to_mel, load_feature_dump, mel_to_hz, normalize_corpus, pad_to_length,
    read_wav, save_feature_dump, unpad, write_wav, AudioClip, FeaturesError, MfccExtractor, NormStats, FEATURE_DIM,
    FFT_SIZE, NUM_CEPSTRA, NUM_FILTERS, SAMPLE_RATE,
};
use rcnn_core::numerics::{Rng, Tensor};

fn sine(freq: f64, amplitude: f64, n: usize) -> Vec<f64> {
    (0..n)
        .map(|i| amplitude * (2.0 * PI * freq * i as f64 / SAMPLE_RATE as f64).sin())
        .collect()
}

/// `|X_k|² / N` by the O(N²) definition.
fn naive_power(frame: &[f64]) -> Vec<f64> {
    let n = FFT_SIZE;
    (0..=n / 2)
        .map(|k| {
            let (mut re, mut im) = (0.0, 0.0);
            for (j, &x) in frame.iter().enumerate() {
                let a = -2.0 * PI * (k * j) as f64 / n as f64;
                re += x * a.cos();
                im += x * a.sin();
            }
            (re * re + im * im) / n as f64
        })
        .collect()
}

#[test]
fn one_second_gives_98_frames_of_39() {
    let ex = MfccExtractor::new(SAMPLE_RATE).unwrap();
    let clip = AudioClip::new(sine(440.0, 0.5, 16_000), SAMPLE_RATE).unwrap();
    let feats = ex.extract(&clip).unwrap();
    assert_eq!(feats.shape(), [98, FEATURE_DIM]);
    assert!(feats.data().iter().all(|v| v.is_finite()));
}

#[test]
fn fft_power_matches_naive_dft() {
    let ex = MfccExtractor::new(SAMPLE_RATE).unwrap();
    let mut rng = Rng::new(4);
    for _ in 0..5 {
        let samples: Vec<f64> = (0..400).map(|_| rng.normal()).collect();
        let clip = AudioClip::new(samples, SAMPLE_RATE).unwrap();
        let frame = &frame_and_window(&clip).unwrap()[0];
        let fast = ex.power_spectrum(frame);
        let slow = naive_power(frame);
        let worst = fast.iter().zip(&slow).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        assert!(worst <= 1e-8, "{worst}");
    }
}

#[test]
fn one_khz_sine_peaks_at_bin_32() {
    let ex = MfccExtractor::new(SAMPLE_RATE).unwrap();
    let clip = AudioClip::new(sine(1000.0, 1.0, 400), SAMPLE_RATE).unwrap();
    let frame = &frame_and_window(&clip).unwrap()[0];
    let power = ex.power_spectrum(frame);
    let peak = (0..power.len()).max_by(|&a, &b| power[a].total_cmp(&power[b])).unwrap();
    assert_eq!(peak, 32);
    let slow = naive_power(frame);
    assert!((power[32] - slow[32]).abs() <= 1e-8 * slow[32].max(1.0));
    // The filter whose peak lies nearest 1 kHz collects the most energy.
    let mel = ex.mel_energies(&power);
    let best = (0..NUM_FILTERS).max_by(|&a, &b| mel[a].total_cmp(&mel[b])).unwrap();
    let top = hz_to_mel(SAMPLE_RATE as f64 / 2.0);
    let centre = |m: usize| mel_to_hz(top * (m + 1) as f64 / (NUM_FILTERS + 1) as f64);
    let nearest = (0..NUM_FILTERS)
        .min_by(|&a, &b| (centre(a) - 1000.0).abs().total_cmp(&(centre(b) - 1000.0).abs()))
        .unwrap();
    assert!(best.abs_diff(nearest) <= 1, "{best} vs {nearest}");
}

#[test]
fn doubling_amplitude_shifts_only_c0_by_ln4() {
    let ex = MfccExtractor::new(SAMPLE_RATE).unwrap();
    let mut rng = Rng::new(8);
    let base: Vec<f64> = (0..2000).map(|_| 0.3 * rng.normal()).collect();
    let doubled: Vec<f64> = base.iter().map(|v| 2.0 * v).collect();
    let a = ex.extract(&AudioClip::new(base, SAMPLE_RATE).unwrap()).unwrap();
    let b = ex.extract(&AudioClip::new(doubled, SAMPLE_RATE).unwrap()).unwrap();
    let (frames, _) = a.dims2().unwrap();
    for t in 0..frames {
        assert!((b.get2(t, 0) - a.get2(t, 0) - 4f64.ln()).abs() < 1e-9);
        for c in 1..FEATURE_DIM {
            assert!((b.get2(t, c) - a.get2(t, c)).abs() < 1e-9, "t={t} c={c}");
        }
    }
}

#[test]
fn filterbank_triangles_are_well_formed() {
    let ex = MfccExtractor::new(SAMPLE_RATE).unwrap();
    let fb = ex.filterbank();
    assert_eq!(fb.len(), NUM_FILTERS);
    for tri in fb {
        assert_eq!(tri.len(), FFT_SIZE / 2 + 1);
        assert!(tri.iter().all(|&w| (0.0..=1.0).contains(&w)));
        assert!(tri.iter().any(|&w| w > 0.0));
    }
    // Peaks move upward in frequency.
    let peaks: Vec<usize> = fb
        .iter()
        .map(|tri| (0..tri.len()).max_by(|&a, &b| tri[a].total_cmp(&tri[b])).unwrap())
        .collect();
    assert!(peaks.windows(2).all(|w| w[0] <= w[1]));
}

#[test]
fn mel_scale_round_trips() {
    for hz in [0.0, 100.0, 1000.0, 8000.0] {
        assert!((mel_to_hz(hz_to_mel(hz)) - hz).abs() < 1e-9);
    }
    assert!((hz_to_mel(1000.0) - 2595.0 * (1.0f64 + 1000.0 / 700.0).log10()).abs() < 1e-12);
}

#[test]
fn hamming_endpoints() {
    let w = hamming_window(400);
    assert!((w[0] - 0.08).abs() < 1e-12);
    assert!((w[399] - 0.08).abs() < 1e-12);
}

#[test]
fn ramp_has_unit_delta_and_zero_delta_delta_inside() {
    let rows: Vec<Vec<f64>> = (0..20).map(|t| vec![t as f64; NUM_CEPSTRA]).collect();
    let d = deltas(&Tensor::from_rows(&rows).unwrap()).unwrap();
    assert_eq!(d.shape(), [20, 3 * NUM_CEPSTRA]);
    // Edge replication disturbs the first and last two frames of Δ, and
    // four of ΔΔ.
    for t in 2..18 {
        assert!((d.get2(t, NUM_CEPSTRA) - 1.0).abs() < 1e-12);
    }
    for t in 4..16 {
        assert!(d.get2(t, 2 * NUM_CEPSTRA).abs() < 1e-12);
    }
}

#[test]
fn deltas_of_a_constant_are_zero() {
    let d = deltas(&Tensor::from_rows(&vec![vec![3.5, -1.0]; 7]).unwrap()).unwrap();
    for t in 0..7 {
        assert_eq!(&d.row(t)[2..], &[0.0; 4]);
    }
}

#[test]
fn short_and_wrong_rate_clips_are_rejected() {
    assert!(matches!(
        AudioClip::new(vec![0.0; 399], SAMPLE_RATE),
        Err(FeaturesError::ShortClip {
            samples: 399,
            required: 400
        })
    ));
    let ex = MfccExtractor::new(SAMPLE_RATE).unwrap();
    let clip = AudioClip::new(vec![0.0; 800], 8000).unwrap();
    assert!(matches!(ex.extract(&clip), Err(FeaturesError::SampleRate(8000))));
}

#[test]
fn silence_hits_the_log_floor() {
    let ex = MfccExtractor::new(SAMPLE_RATE).unwrap();
    let feats = ex
        .extract(&AudioClip::new(vec![0.0; 800], SAMPLE_RATE).unwrap())
        .unwrap();
    assert!((feats.get2(0, 0) - 1e-10f64.ln()).abs() < 1e-12);
}

#[test]
fn normalization_gives_zero_mean_unit_variance() {
    let mut rng = Rng::new(12);
    let mats: Vec<Tensor<f64>> = (0..4)
        .map(|i| {
            let rows: Vec<Vec<f64>> = (0..10 + i)
                .map(|_| vec![5.0 + 2.0 * rng.normal(), -3.0 + 0.5 * rng.normal(), 7.0])
                .collect();
            Tensor::from_rows(&rows).unwrap()
        })
        .collect();
    let (normed, stats) = normalize_corpus(&mats).unwrap();
    let all: Vec<&[f64]> = normed
        .iter()
        .flat_map(|m| (0..m.dims2().unwrap().0).map(|t| m.row(t)))
        .collect();
    let n = all.len() as f64;
    for d in 0..2 {
        let mean = all.iter().map(|r| r[d]).sum::<f64>() / n;
        let var = all.iter().map(|r| (r[d] - mean).powi(2)).sum::<f64>() / n;
        assert!(mean.abs() < 1e-12 && (var - 1.0).abs() < 1e-12, "dim {d}: {mean} {var}");
    }
    // A constant dimension is clamped instead of dividing by zero.
    assert!(all.iter().all(|r| r[2] == 0.0));
    assert_eq!(stats.clamped, vec![2]);
    let back = NormStats::parse(&stats.to_text()).unwrap();
    assert_eq!((back.mean, back.std), (stats.mean, stats.std));
}

#[test]
fn pad_then_unpad_is_identity() {
    let m = Tensor::from_rows(&[vec![1.0, 2.0], vec![3.0, 4.0]]).unwrap();
    let (p, valid) = pad_to_length(&m, 5).unwrap();
    assert_eq!((p.shape(), valid), (&[5, 2][..], 2));
    assert!(p.data()[4..].iter().all(|&v| v == 0.0));
    assert_eq!(unpad(&p, valid).unwrap(), m);
    assert!(matches!(pad_to_length(&m, 1), Err(FeaturesError::PadTooShort { .. })));
}

#[test]
fn wav_and_dump_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let samples: Vec<f64> = sine(300.0, 0.25, 1600)
        .iter()
        .map(|v| (v * 32768.0).round() / 32768.0)
        .collect();
    let clip = AudioClip::new(samples, SAMPLE_RATE).unwrap();
    let path = dir.path().join("a.wav");
    write_wav(&path, &clip).unwrap();
    let back = read_wav(&path).unwrap();
    assert_eq!(back, clip);

    let ex = MfccExtractor::new(SAMPLE_RATE).unwrap();
    let feats = ex.extract(&back).unwrap();
    let dump = dir.path().join("a.txt");
    save_feature_dump(&dump, &feats).unwrap();
    assert_eq!(load_feature_dump(&dump).unwrap(), feats);
}
