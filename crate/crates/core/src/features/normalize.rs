use super::FeaturesError;
use crate::numerics::{Scalar, Tensor};

/// Per-dimension mean and standard deviation pooled over every training frame.
#[derive(Clone, Debug, PartialEq)]
pub struct NormStats {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
    /// Dimensions whose standard deviation was zero and has been clamped to 1.
    pub clamped: Vec<usize>,
}

impl NormStats {
    /// Pooled moments of all rows of `mats` (population variance).
    pub fn from_matrices<T: Scalar>(mats: &[Tensor<T>]) -> Result<Self, FeaturesError> {
        let first = mats.first().ok_or(FeaturesError::EmptyCorpus)?;
        let (_, width) = first.dims2()?;
        let mut sum = vec![0.0; width];
        let mut count = 0usize;
        for m in mats {
            let (frames, w) = m.dims2()?;
            if w != width {
                return Err(FeaturesError::Width {
                    expected: width,
                    actual: w,
                });
            }
            for t in 0..frames {
                for (s, v) in sum.iter_mut().zip(m.row(t)) {
                    *s += v.to_f64_lossy();
                }
            }
            count += frames;
        }
        if count == 0 {
            return Err(FeaturesError::EmptyCorpus);
        }
        let mean: Vec<f64> = sum.iter().map(|s| s / count as f64).collect();
        let mut sq = vec![0.0; width];
        for m in mats {
            for t in 0..m.shape()[0] {
                for ((q, v), mu) in sq.iter_mut().zip(m.row(t)).zip(&mean) {
                    let d = v.to_f64_lossy() - mu;
                    *q += d * d;
                }
            }
        }
        let mut clamped = Vec::new();
        let std = sq
            .iter()
            .enumerate()
            .map(|(j, q)| {
                let s = (q / count as f64).sqrt();
                if s > 0.0 {
                    s
                } else {
                    log::warn!("feature dimension {j} has zero variance; std clamped to 1");
                    clamped.push(j);
                    1.0
                }
            })
            .collect();
        Ok(NormStats { mean, std, clamped })
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    /// `(x − mean) / std` column-wise.
    pub fn apply<T: Scalar>(&self, mat: &Tensor<T>) -> Result<Tensor<T>, FeaturesError> {
        let (frames, width) = mat.dims2()?;
        if width != self.dim() {
            return Err(FeaturesError::Width {
                expected: self.dim(),
                actual: width,
            });
        }
        let mut out = mat.clone();
        for t in 0..frames {
            for ((v, mu), sd) in out.row_mut(t).iter_mut().zip(&self.mean).zip(&self.std) {
                *v = T::lit((v.to_f64_lossy() - mu) / sd);
            }
        }
        Ok(out)
    }

    /// Two text rows: means, then standard deviations.
    pub fn to_text(&self) -> String {
        let row = |v: &[f64]| v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(" ");
        format!("{}\n{}\n", row(&self.mean), row(&self.std))
    }

    pub fn parse(text: &str) -> Result<Self, FeaturesError> {
        let rows: Vec<Vec<f64>> = text
            .lines()
            .enumerate()
            .filter(|(_, l)| !l.trim().is_empty())
            .map(|(i, l)| {
                l.split_whitespace()
                    .map(|tok| {
                        tok.parse::<f64>().map_err(|e| FeaturesError::Parse {
                            line: i + 1,
                            msg: format!("`{tok}`: {e}"),
                        })
                    })
                    .collect()
            })
            .collect::<Result<_, _>>()?;
        if rows.len() != 2 || rows[0].len() != rows[1].len() || rows[0].is_empty() {
            return Err(FeaturesError::Parse {
                line: rows.len().min(2),
                msg: "expected two rows of equal length (mean, std)".into(),
            });
        }
        if let Some(j) = rows[1].iter().position(|&s| s <= 0.0 || !s.is_finite()) {
            return Err(FeaturesError::Parse {
                line: 2,
                msg: format!("std in column {j} must be positive"),
            });
        }
        let mut it = rows.into_iter();
        Ok(NormStats {
            mean: it.next().unwrap_or_default(),
            std: it.next().unwrap_or_default(),
            clamped: Vec::new(),
        })
    }
}

/// Normalizes every matrix by moments pooled over all of them. Compute the
/// stats on the training portion only and reuse them via [`NormStats::apply`]
/// for validation and test data.
pub fn normalize_corpus<T: Scalar>(mats: &[Tensor<T>]) -> Result<(Vec<Tensor<T>>, NormStats), FeaturesError> {
    let stats = NormStats::from_matrices(mats)?;
    let out = mats.iter().map(|m| stats.apply(m)).collect::<Result<_, _>>()?;
    Ok((out, stats))
}

/// Appends zero rows up to `t_max`; returns the padded matrix and the
/// original length.
pub fn pad_to_length<T: Scalar>(mat: &Tensor<T>, t_max: usize) -> Result<(Tensor<T>, usize), FeaturesError> {
    let (frames, width) = mat.dims2()?;
    if frames > t_max {
        return Err(FeaturesError::PadTooShort {
            len: frames,
            target: t_max,
        });
    }
    let mut data = mat.data().to_vec();
    data.resize(t_max * width, T::zero());
    Ok((Tensor::new(vec![t_max, width], data)?, frames))
}

/// First `valid` rows of a padded matrix.
pub fn unpad<T: Scalar>(mat: &Tensor<T>, valid: usize) -> Result<Tensor<T>, FeaturesError> {
    let (frames, width) = mat.dims2()?;
    if valid > frames {
        return Err(FeaturesError::PadTooShort {
            len: valid,
            target: frames,
        });
    }
    Ok(Tensor::new(vec![valid, width], mat.data()[..valid * width].to_vec())?)
}
