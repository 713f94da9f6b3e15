use std::collections::HashSet;
use std::path::Path;

use super::{Corpus, CorpusError};
use crate::numerics::Rng;
use crate::trainer::{train, TrainConfig};

/// Number of utterances in each split.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SplitSizes {
    pub train: usize,
    pub val: usize,
    pub test: usize,
}

impl SplitSizes {
    /// Full-size split: 5000 train, 1000 validation, 300 test.
    pub const FULL: SplitSizes = SplitSizes {
        train: 5000,
        val: 1000,
        test: 300,
    };

    pub fn total(&self) -> usize {
        self.train + self.val + self.test
    }

    /// [`SplitSizes::FULL`] rescaled to `n` utterances: validation and test
    /// keep their share (rounded down), everything else goes to training.
    pub fn proportional(n: usize) -> Self {
        let p = Self::FULL;
        let (val, test) = if n >= p.total() {
            (p.val, p.test)
        } else {
            (n * p.val / p.total(), n * p.test / p.total())
        };
        SplitSizes {
            train: n - val - test,
            val,
            test,
        }
    }
}

/// Disjoint train/validation/test id lists covering a corpus.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Partition {
    pub train: Vec<String>,
    pub val: Vec<String>,
    pub test: Vec<String>,
    pub seed: u64,
}

impl Partition {
    /// Checks that the three lists are disjoint and cover exactly `ids`.
    pub fn check_cover(&self, ids: &[String]) -> Result<(), CorpusError> {
        let mut seen = HashSet::new();
        for id in self.train.iter().chain(&self.val).chain(&self.test) {
            if !seen.insert(id.as_str()) {
                return Err(CorpusError::NotACover(format!("`{id}` appears twice")));
            }
        }
        let all: HashSet<&str> = ids.iter().map(String::as_str).collect();
        if let Some(id) = all.iter().find(|id| !seen.contains(*id)) {
            return Err(CorpusError::NotACover(format!("`{id}` is unassigned")));
        }
        if let Some(id) = seen.iter().find(|id| !all.contains(*id)) {
            return Err(CorpusError::NotACover(format!("`{id}` is not in the corpus")));
        }
        Ok(())
    }

    /// Writes `train.txt`, `val.txt` and `test.txt` (one id per line) plus `seed.txt`.
    pub fn save(&self, dir: &Path) -> Result<(), CorpusError> {
        std::fs::create_dir_all(dir)?;
        for (name, ids) in [("train", &self.train), ("val", &self.val), ("test", &self.test)] {
            let mut text = ids.join("\n");
            if !ids.is_empty() {
                text.push('\n');
            }
            std::fs::write(dir.join(format!("{name}.txt")), text)?;
        }
        std::fs::write(dir.join("seed.txt"), format!("{}\n", self.seed))?;
        Ok(())
    }

    pub fn load(dir: &Path) -> Result<Self, CorpusError> {
        let read = |name: &str| -> Result<Vec<String>, CorpusError> {
            Ok(std::fs::read_to_string(dir.join(name))?
                .lines()
                .map(str::trim)
                .filter(|l| !l.is_empty())
                .map(str::to_string)
                .collect())
        };
        let seed = match std::fs::read_to_string(dir.join("seed.txt")) {
            Ok(s) => s.trim().parse().map_err(|e| CorpusError::Parse {
                file: "seed.txt".into(),
                line: 1,
                msg: format!("{e}"),
            })?,
            Err(_) => 0,
        };
        Ok(Partition {
            train: read("train.txt")?,
            val: read("val.txt")?,
            test: read("test.txt")?,
            seed,
        })
    }
}

/// `n_partitions` seeded random splits of `ids`. Ids beyond `sizes.total()`
/// go to training, so every partition covers the whole corpus.
pub fn make_partitions(
    ids: &[String],
    sizes: SplitSizes,
    n_partitions: usize,
    seed: u64,
) -> Result<Vec<Partition>, CorpusError> {
    if ids.len() < sizes.total() || ids.is_empty() {
        return Err(CorpusError::TooSmall {
            available: ids.len(),
            required: sizes.total().max(1),
        });
    }
    let mut sorted = ids.to_vec();
    sorted.sort();
    (0..n_partitions)
        .map(|p| {
            let mut order = sorted.clone();
            Rng::derive(seed, &[p as u64]).shuffle(&mut order);
            let test = order.split_off(order.len() - sizes.test);
            let val = order.split_off(order.len() - sizes.val);
            let part = Partition {
                train: order,
                val,
                test,
                seed,
            };
            part.check_cover(ids)?;
            Ok(part)
        })
        .collect()
}

/// Picks among per-partition validation-cost curves (`None` = training
/// failed). Lowest final cost wins; ties go to the smoothest descent (the
/// smallest largest epoch-to-epoch increase), then to the lowest index.
pub fn choose_partition(curves: &[Option<Vec<f64>>]) -> Result<usize, CorpusError> {
    if curves.is_empty() {
        return Err(CorpusError::NoPartitions);
    }
    let max_rise = |c: &[f64]| c.windows(2).map(|w| w[1] - w[0]).fold(0.0f64, f64::max);
    curves
        .iter()
        .enumerate()
        .filter_map(|(i, c)| {
            let c = c.as_ref()?;
            let last = *c.last()?;
            (last.is_finite() && c.iter().all(|v| v.is_finite())).then(|| (i, last, max_rise(c)))
        })
        .min_by(|a, b| a.1.total_cmp(&b.1).then(a.2.total_cmp(&b.2)).then(a.0.cmp(&b.0)))
        .map(|(i, _, _)| i)
        .ok_or(CorpusError::AllDiverged)
}

/// Trains `baseline` for `budget_epochs` on each partition and returns the
/// index chosen by [`choose_partition`]. A single partition is returned
/// without training.
pub fn select_partition(
    corpus: &Corpus,
    partitions: &[Partition],
    baseline: &TrainConfig,
    budget_epochs: usize,
) -> Result<usize, CorpusError> {
    match partitions.len() {
        0 => return Err(CorpusError::NoPartitions),
        1 => return Ok(0),
        _ => {}
    }
    let cfg = TrainConfig {
        epochs: budget_epochs,
        ..baseline.clone()
    };
    let curves: Vec<Option<Vec<f64>>> = partitions
        .iter()
        .enumerate()
        .map(|(i, p)| match train::<f64>(&cfg, corpus, p, None) {
            Ok(outcome) => Some(outcome.curve.rows.iter().map(|r| r.val_cost).collect()),
            Err(e) => {
                log::warn!("partition {i}: baseline training failed: {e}");
                None
            }
        })
        .collect();
    choose_partition(&curves)
}
