use std::path::Path;

use super::{train, TrainConfig, TrainError, TrainOutcome};
use crate::corpus::{Corpus, Partition};
use crate::numerics::Scalar;

/// One architecture's result in a comparison run.
#[derive(Debug)]
pub struct Comparison<T> {
    pub name: String,
    pub outcome: Result<TrainOutcome<T>, TrainError>,
}

/// Trains each named architecture with the same config, data and seed, so
/// all models see identical batch streams. Each model writes its files into
/// `out_dir/<name>/` and its curve additionally to `out_dir/<name>_curve.csv`.
/// A failing model is recorded and the rest still run.
pub fn compare_architectures<T: Scalar>(
    names: &[String],
    config: &TrainConfig,
    corpus: &Corpus,
    partition: &Partition,
    out_dir: Option<&Path>,
) -> Vec<Comparison<T>> {
    names
        .iter()
        .map(|name| {
            let cfg = TrainConfig {
                network: name.clone(),
                network_file: None,
                log_path: None,
                ..config.clone()
            };
            let sub = out_dir.map(|d| d.join(name));
            let outcome = train::<T>(&cfg, corpus, partition, sub.as_deref()).and_then(|o| {
                if let Some(dir) = out_dir {
                    o.curve.save(&dir.join(format!("{name}_curve.csv")))?;
                }
                Ok(o)
            });
            if let Err(e) = &outcome {
                log::error!("{name}: {e}");
            }
            Comparison {
                name: name.clone(),
                outcome,
            }
        })
        .collect()
}
