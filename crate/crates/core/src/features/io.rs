use std::path::Path;

use super::{AudioClip, FeaturesError, SAMPLE_RATE};
use crate::numerics::Tensor;

/// Reads a 16-bit PCM mono 16 kHz WAV, scaling samples to [-1, 1).
pub fn read_wav(path: &Path) -> Result<AudioClip, FeaturesError> {
    let mut reader = hound::WavReader::open(path)?;
    let spec = reader.spec();
    if spec.channels != 1 {
        return Err(FeaturesError::WavFormat(format!(
            "{} channels, expected mono",
            spec.channels
        )));
    }
    if spec.sample_format != hound::SampleFormat::Int || spec.bits_per_sample != 16 {
        return Err(FeaturesError::WavFormat(format!(
            "{}-bit {:?} samples, expected 16-bit PCM",
            spec.bits_per_sample, spec.sample_format
        )));
    }
    if spec.sample_rate != SAMPLE_RATE {
        return Err(FeaturesError::SampleRate(spec.sample_rate));
    }
    let samples = reader
        .samples::<i16>()
        .map(|s| s.map(|v| v as f64 / 32768.0))
        .collect::<Result<Vec<_>, _>>()?;
    AudioClip::new(samples, spec.sample_rate)
}

/// Writes a clip as 16-bit PCM mono, clipping to the representable range.
pub fn write_wav(path: &Path, clip: &AudioClip) -> Result<(), FeaturesError> {
    let spec = hound::WavSpec {
        channels: 1,
        sample_rate: clip.sample_rate,
        bits_per_sample: 16,
        sample_format: hound::SampleFormat::Int,
    };
    let mut writer = hound::WavWriter::create(path, spec)?;
    for &s in &clip.samples {
        writer.write_sample((s * 32768.0).round().clamp(-32768.0, 32767.0) as i16)?;
    }
    writer.finalize()?;
    Ok(())
}

/// `T W` header line followed by `T` whitespace-separated rows. Values use
/// the shortest representation that parses back to the same bits.
pub fn format_feature_dump(mat: &Tensor<f64>) -> Result<String, FeaturesError> {
    let (frames, width) = mat.dims2()?;
    let mut out = format!("{frames} {width}\n");
    for t in 0..frames {
        let row: Vec<String> = mat.row(t).iter().map(|v| v.to_string()).collect();
        out.push_str(&row.join(" "));
        out.push('\n');
    }
    Ok(out)
}

pub fn parse_feature_dump(text: &str) -> Result<Tensor<f64>, FeaturesError> {
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
    let (_, header) = lines.next().ok_or(FeaturesError::Parse {
        line: 1,
        msg: "missing `T W` header".into(),
    })?;
    let dims: Vec<usize> = header
        .split_whitespace()
        .map(|t| t.parse::<usize>())
        .collect::<Result<_, _>>()
        .map_err(|e| FeaturesError::Parse {
            line: 1,
            msg: format!("bad header `{header}`: {e}"),
        })?;
    let [frames, width] = dims[..] else {
        return Err(FeaturesError::Parse {
            line: 1,
            msg: format!("header `{header}` must be `T W`"),
        });
    };
    let mut data = Vec::with_capacity(frames * width);
    let mut rows = 0;
    for (i, line) in lines {
        let vals: Vec<f64> = line
            .split_whitespace()
            .map(|t| t.parse::<f64>())
            .collect::<Result<_, _>>()
            .map_err(|e| FeaturesError::Parse {
                line: i + 1,
                msg: e.to_string(),
            })?;
        if vals.len() != width {
            return Err(FeaturesError::Parse {
                line: i + 1,
                msg: format!("{} values, expected {width}", vals.len()),
            });
        }
        data.extend(vals);
        rows += 1;
    }
    if rows != frames {
        return Err(FeaturesError::Parse {
            line: rows + 1,
            msg: format!("{rows} rows, header promised {frames}"),
        });
    }
    Ok(Tensor::new(vec![frames, width], data)?)
}

pub fn save_feature_dump(path: &Path, mat: &Tensor<f64>) -> Result<(), FeaturesError> {
    std::fs::write(path, format_feature_dump(mat)?)?;
    Ok(())
}

pub fn load_feature_dump(path: &Path) -> Result<Tensor<f64>, FeaturesError> {
    parse_feature_dump(&std::fs::read_to_string(path)?)
}
