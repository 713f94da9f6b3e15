use std::collections::BTreeMap;
use std::fs::File;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;

use super::{CostCurve, CurveRow, TrainConfig, TrainError};
use crate::corpus::{Corpus, Partition, Utterance};
use crate::ctc::{beam_decode, ctc_loss_and_grad, greedy_decode, softmax_rows, CtcError, PhonemeSequence};
use crate::eval::per;
use crate::features::{pad_to_length, unpad, NormStats};
use crate::lm::{rescore, NgramModel};
use crate::network::{Mode, Network, NetworkConfig};
use crate::numerics::{AdamConfig, Checkpoint, Gradients, ParameterStore, Rng, Scalar, Tensor};

/// Architecture file written next to the checkpoints.
pub const NETWORK_FILE: &str = "network.txt";
/// Normalization statistics written next to the checkpoints.
pub const STATS_FILE: &str = "norm_stats.txt";

const INIT_TAG: u64 = 0x696e6974;
const SHUFFLE_TAG: u64 = 0x73687566;
const DROPOUT_TAG: u64 = 0x64726f70;

/// A normalized utterance in working precision.
#[derive(Clone, Debug)]
pub struct Prepared<T> {
    pub id: String,
    pub x: Tensor<T>,
    pub labels: PhonemeSequence,
}

/// Normalizes with `stats` and casts to `T`.
pub fn prepare<T: Scalar>(utts: &[&Utterance], stats: &NormStats) -> Result<Vec<Prepared<T>>, TrainError> {
    utts.iter()
        .map(|u| {
            Ok(Prepared {
                id: u.id.clone(),
                x: stats.apply(&u.features)?.cast(),
                labels: u.labels.clone(),
            })
        })
        .collect()
}

/// Per-frame label posteriors of one utterance.
pub fn posteriors<T: Scalar>(net: &Network, store: &ParameterStore<T>, x: &Tensor<T>) -> Result<Tensor<T>, TrainError> {
    Ok(softmax_rows(&net.infer(store, x)?)?)
}

/// Inference-mode cost and greedy-decode PER over a set of utterances.
#[derive(Clone, Debug, PartialEq)]
pub struct Evaluation {
    /// Mean CTC loss; NaN when `data` is empty.
    pub cost: f64,
    /// Length-weighted PER of the greedy decodes; NaN when `data` is empty.
    pub per: f64,
    pub hypotheses: BTreeMap<String, PhonemeSequence>,
}

pub fn evaluate<T: Scalar>(
    net: &Network,
    store: &ParameterStore<T>,
    data: &[Prepared<T>],
    blank: usize,
) -> Result<Evaluation, TrainError> {
    if data.is_empty() {
        return Ok(Evaluation {
            cost: f64::NAN,
            per: f64::NAN,
            hypotheses: BTreeMap::new(),
        });
    }
    let results = data
        .par_iter()
        .map(|u| {
            let logits = net.infer(store, &u.x)?;
            let (loss, _) = ctc_loss_and_grad(&logits, &u.labels, blank)?;
            let (hyp, _) = greedy_decode(&softmax_rows(&logits)?, blank)?;
            Ok((loss.to_f64_lossy(), hyp))
        })
        .collect::<Result<Vec<_>, TrainError>>()?;
    let cost = results.iter().map(|r| r.0).sum::<f64>() / data.len() as f64;
    let hypotheses: BTreeMap<String, PhonemeSequence> = data
        .iter()
        .zip(&results)
        .map(|(u, r)| (u.id.clone(), r.1.clone()))
        .collect();
    let refs: BTreeMap<String, PhonemeSequence> = data.iter().map(|u| (u.id.clone(), u.labels.clone())).collect();
    let per = per(&refs, &hypotheses).expect("same id sets").aggregate();
    Ok(Evaluation { cost, per, hypotheses })
}

/// Ids of the utterances in one optimizer step.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BatchRecord {
    pub epoch: usize,
    pub batch: usize,
    pub ids: Vec<String>,
}

#[derive(Clone, Debug)]
pub struct TrainOutcome<T> {
    pub network: Network,
    pub store: ParameterStore<T>,
    pub curve: CostCurve,
    pub stats: NormStats,
    pub batches: Vec<BatchRecord>,
    /// Inference-mode mean training loss before the first update.
    pub initial_train_cost: f64,
    /// Utterances left out because CTC cannot fit their labels.
    pub skipped: Vec<String>,
}

fn feasible<'a>(utts: Vec<&'a Utterance>, skipped: &mut Vec<String>) -> Vec<&'a Utterance> {
    utts.into_iter()
        .filter(|u| {
            if !u.feasible {
                log::warn!("skipping infeasible utterance `{}`", u.id);
                skipped.push(u.id.clone());
            }
            u.feasible
        })
        .collect()
}

fn file_stem(name: &str) -> String {
    name.chars()
        .map(|c| {
            if c.is_ascii_alphanumeric() || c == '-' || c == '_' {
                c
            } else {
                '_'
            }
        })
        .collect()
}

/// One utterance's loss and parameter gradients with the batch padding.
fn utterance_grads<T: Scalar>(
    net: &Network,
    store: &ParameterStore<T>,
    u: &Prepared<T>,
    t_max: usize,
    blank: usize,
    rng: &mut Rng,
) -> Result<(f64, Gradients<T>), TrainError> {
    let (x, valid) = pad_to_length(&u.x, t_max)?;
    let (logits, cache) = net.forward_masked(store, &x, valid, Mode::Train(rng))?;
    let (loss, g) = ctc_loss_and_grad(&unpad(&logits, valid)?, &u.labels, blank)?;
    let (g, _) = pad_to_length(&g, t_max)?;
    let mut grads = store.zero_gradients();
    net.backward(store, &cache, &g, &mut grads)?;
    Ok((loss.to_f64_lossy(), grads))
}

struct Outputs {
    dir: PathBuf,
    stem: String,
    batch_log: File,
}

impl Outputs {
    fn open(dir: &Path, cfg: &TrainConfig, net_cfg: &NetworkConfig, stats: &NormStats) -> Result<Self, TrainError> {
        std::fs::create_dir_all(dir)?;
        let stem = file_stem(&net_cfg.name);
        std::fs::write(dir.join(NETWORK_FILE), net_cfg.to_text())?;
        std::fs::write(dir.join(STATS_FILE), stats.to_text())?;
        std::fs::write(dir.join(format!("{stem}_train.toml")), cfg.to_toml())?;
        let log_path = cfg
            .log_path
            .clone()
            .unwrap_or_else(|| dir.join(format!("{stem}_batches.log")));
        let batch_log = File::create(log_path)?;
        let out = Outputs {
            dir: dir.to_path_buf(),
            stem,
            batch_log,
        };
        out.write_curve(&CostCurve::default())?;
        Ok(out)
    }

    fn curve_path(&self) -> PathBuf {
        self.dir.join(format!("{}_curve.csv", self.stem))
    }

    fn write_curve(&self, curve: &CostCurve) -> Result<(), TrainError> {
        curve.save(&self.curve_path())
    }

    fn log_batch(&mut self, rec: &BatchRecord) -> Result<(), TrainError> {
        writeln!(self.batch_log, "{} {} {}", rec.epoch, rec.batch, rec.ids.join(" "))?;
        Ok(())
    }

    fn checkpoint<T: Scalar>(&self, store: &ParameterStore<T>, epoch: usize) -> Result<(), TrainError> {
        Checkpoint::from_store(store).save(&self.dir.join(format!("{}_{epoch}.ckpt", self.stem)))?;
        Ok(())
    }
}

/// Trains on `partition.train`, validating on `partition.val` after every
/// epoch. With `out_dir`, writes the architecture, normalization stats,
/// config, cost curve, batch log and `<model>_<epoch>.ckpt` checkpoints.
///
/// Everything random derives from `config.seed`: initialization, the
/// per-epoch shuffle, and a dropout stream per (epoch, batch, position), so
/// a run is bit-reproducible regardless of thread scheduling.
pub fn train<T: Scalar>(
    config: &TrainConfig,
    corpus: &Corpus,
    partition: &Partition,
    out_dir: Option<&Path>,
) -> Result<TrainOutcome<T>, TrainError> {
    config.validate()?;
    let blank = corpus.alphabet.blank();
    let net_cfg = config.resolve_network(corpus.alphabet.num_labels())?;
    let mut skipped = Vec::new();
    let train_utts = feasible(corpus.select(&partition.train)?, &mut skipped);
    let val_utts = feasible(corpus.select(&partition.val)?, &mut skipped);
    if train_utts.is_empty() {
        return Err(TrainError::NoTrainingData);
    }
    let feats: Vec<Tensor<f64>> = train_utts.iter().map(|u| u.features.clone()).collect();
    let stats = NormStats::from_matrices(&feats)?;
    let train_data: Vec<Prepared<T>> = prepare(&train_utts, &stats)?;
    let val_data: Vec<Prepared<T>> = prepare(&val_utts, &stats)?;
    let input_dim = stats.dim();

    let (network, mut store) = Network::build::<T>(&net_cfg, input_dim, &mut Rng::derive(config.seed, &[INIT_TAG]))?;
    log::info!(
        "training {} ({} parameters) on {} utterances, validating on {}",
        net_cfg.name,
        store.num_params(),
        train_data.len(),
        val_data.len()
    );
    let mut outputs = match out_dir {
        Some(dir) => Some(Outputs::open(dir, config, &net_cfg, &stats)?),
        None => None,
    };
    let initial_train_cost = evaluate(&network, &store, &train_data, blank)?.cost;
    let adam = AdamConfig::with_lr(config.lr);
    let start = Instant::now();
    let mut curve = CostCurve::default();
    let mut batches = Vec::new();

    for epoch in 1..=config.epochs {
        let mut order: Vec<usize> = (0..train_data.len()).collect();
        Rng::derive(config.seed, &[SHUFFLE_TAG, epoch as u64]).shuffle(&mut order);
        let mut loss_sum = 0.0;
        for (b, chunk) in order.chunks(config.batch_size).enumerate() {
            let t_max = chunk.iter().map(|&i| train_data[i].x.shape()[0]).max().unwrap_or(0);
            let results: Vec<Result<(f64, Gradients<T>), TrainError>> = chunk
                .par_iter()
                .enumerate()
                .map(|(pos, &i)| {
                    let mut rng = Rng::derive(config.seed, &[DROPOUT_TAG, epoch as u64, b as u64, pos as u64]);
                    utterance_grads(&network, &store, &train_data[i], t_max, blank, &mut rng)
                })
                .collect();
            let mut total: Option<Gradients<T>> = None;
            for (res, &i) in results.into_iter().zip(chunk) {
                let (loss, grads) = res?;
                if !loss.is_finite() {
                    return Err(TrainError::NonFiniteLoss {
                        epoch,
                        batch: b,
                        utterance: train_data[i].id.clone(),
                    });
                }
                loss_sum += loss;
                match &mut total {
                    Some(t) => t.add_assign(&grads).map_err(crate::numerics::NumericsError::from)?,
                    None => total = Some(grads),
                }
            }
            let mut grads = total.expect("chunks are non-empty");
            grads.scale(T::lit(1.0 / chunk.len() as f64));
            if let Some(max_norm) = config.clip_norm {
                let norm = grads.global_norm().to_f64_lossy();
                if norm > max_norm {
                    grads.scale(T::lit(max_norm / norm));
                }
            }
            store
                .set_gradients(&grads)
                .map_err(crate::numerics::NumericsError::from)?;
            store.adam_step(&adam).map_err(|source| TrainError::Optimizer {
                epoch,
                batch: b,
                source,
            })?;
            let rec = BatchRecord {
                epoch,
                batch: b,
                ids: chunk.iter().map(|&i| train_data[i].id.clone()).collect(),
            };
            if let Some(out) = &mut outputs {
                out.log_batch(&rec)?;
            }
            batches.push(rec);
        }
        let val = evaluate(&network, &store, &val_data, blank)?;
        let row = CurveRow {
            epoch,
            wall_clock_minutes: start.elapsed().as_secs_f64() / 60.0,
            train_cost: loss_sum / train_data.len() as f64,
            val_cost: val.cost,
            val_per: val.per,
        };
        log::info!(
            "{} epoch {epoch}: train {:.4}, val {:.4}, val PER {:.4}",
            net_cfg.name,
            row.train_cost,
            row.val_cost,
            row.val_per
        );
        curve.rows.push(row);
        if let Some(out) = &outputs {
            out.write_curve(&curve)?;
            let due = config.checkpoint_every > 0 && epoch % config.checkpoint_every == 0;
            if due || epoch == config.epochs {
                out.checkpoint(&store, epoch)?;
            }
        }
    }
    Ok(TrainOutcome {
        network,
        store,
        curve,
        stats,
        batches,
        initial_train_cost,
        skipped,
    })
}

/// A trained network restored from a checkpoint and its companion files.
#[derive(Clone, Debug)]
pub struct TrainedModel {
    pub network: Network,
    pub store: ParameterStore<f64>,
    pub stats: NormStats,
}

impl TrainedModel {
    /// Loads `ckpt` plus [`NETWORK_FILE`] and [`STATS_FILE`] from the same
    /// directory. Parameters are held in `f64` whatever precision they were
    /// trained in.
    pub fn load(ckpt: &Path) -> Result<Self, TrainError> {
        let dir = ckpt.parent().unwrap_or_else(|| Path::new("."));
        let checkpoint = Checkpoint::load(ckpt)?;
        let config = NetworkConfig::parse(&std::fs::read_to_string(dir.join(NETWORK_FILE))?)?;
        let stats = NormStats::parse(&std::fs::read_to_string(dir.join(STATS_FILE))?)?;
        let (network, mut store) = Network::build::<f64>(&config, stats.dim(), &mut Rng::new(0))?;
        checkpoint.restore_into(&mut store)?;
        Ok(TrainedModel { network, store, stats })
    }
}

/// How [`decode`] turns posteriors into label sequences.
#[derive(Clone, Copy)]
pub struct DecodeOptions<'a> {
    /// Beam width; 1 without an LM means best-path (greedy) decoding.
    pub beam: usize,
    /// Language model used to rectify the final n-best list, with its weight.
    pub lm: Option<(&'a NgramModel, f64)>,
}

/// Decodes every utterance, returning `(score, labels)` per id. The score is
/// the best-path log probability for greedy decoding, the prefix log
/// probability for beam search, and the fused score after rectification.
pub fn decode<T: Scalar>(
    net: &Network,
    store: &ParameterStore<T>,
    data: &[Prepared<T>],
    blank: usize,
    opts: DecodeOptions<'_>,
) -> Result<BTreeMap<String, (f64, PhonemeSequence)>, TrainError> {
    data.par_iter()
        .map(|u| {
            let y = posteriors(net, store, &u.x)?;
            let out = if opts.beam == 1 && opts.lm.is_none() {
                let (labels, score) = greedy_decode(&y, blank)?;
                (score, labels)
            } else {
                let hyps = beam_decode(&y, blank, opts.beam, None, 0.0)?;
                match opts.lm {
                    Some((lm, lambda)) => {
                        let (best, fused) = *rescore(lm, &hyps, lambda).first().ok_or(CtcError::BeamWidth(0))?;
                        (fused, hyps[best].labels.clone())
                    }
                    None => {
                        let h = hyps.into_iter().next().ok_or(CtcError::BeamWidth(0))?;
                        (h.score, h.labels)
                    }
                }
            };
            Ok((u.id.clone(), out))
        })
        .collect()
}
