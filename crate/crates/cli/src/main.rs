//! `rcnn` — command-line pipeline: synthesize or load a corpus, partition it,
//! train and compare acoustic models, train the phoneme LM, decode and score.
//!
//! Exit codes: 0 success, 1 usage error, 2 data error, 3 numeric abort.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use rcnn_core::corpus::{
    generate_synthetic, load_corpus, make_partitions, select_partition, write_corpus, Corpus, Partition, SplitSizes,
    SyntheticSpec, ALPHABET_FILE,
};
use rcnn_core::ctc::{format_hypothesis_line, parse_hypothesis_line, Alphabet, PhonemeSequence};
use rcnn_core::eval::per;
use rcnn_core::lm::{LmConfig, NgramModel, DEFAULT_MU, DEFAULT_SMOOTHING};
use rcnn_core::network::{catalog, CATALOG_NAMES};
use rcnn_core::numerics::Rng;
use rcnn_core::trainer::{
    compare_architectures, decode, prepare, train, DecodeOptions, Precision, TrainConfig, TrainError, TrainedModel,
};

const DEFAULT_COMPARE: [&str; 4] = ["RC2-toy", "CR2-toy", "Res-RC2-toy", "Res-CR2-toy"];
const PARTITION_DIR: &str = "partition";

#[derive(Parser)]
#[command(
    name = "rcnn",
    version,
    about = "Recurrent-convolutional CTC acoustic modeling toolkit"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic corpus (feature dumps + transcripts).
    Synth {
        /// TOML generator spec; defaults are used when omitted.
        #[arg(long)]
        spec: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Extract MFCC feature dumps from a corpus's WAV files.
    Features {
        #[arg(long)]
        data: PathBuf,
        /// Output corpus directory; defaults to `--data`.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Split a corpus into train/validation/test id lists.
    Partition {
        #[arg(long)]
        data: PathBuf,
        /// Directory for train.txt, val.txt, test.txt; defaults to `<data>/partition`.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Candidate partitions to draw.
        #[arg(long, default_value_t = 1)]
        count: usize,
        /// Validation size; with `--test`, overrides the proportional default.
        #[arg(long, requires = "test")]
        val: Option<usize>,
        #[arg(long, requires = "val")]
        test: Option<usize>,
        /// Baseline training config used to choose among several candidates.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Epochs of baseline training per candidate.
        #[arg(long, default_value_t = 3)]
        budget_epochs: usize,
    },
    /// Train one model.
    Train {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Partition directory; defaults to `<data>/partition`, or a fresh
        /// proportional split seeded by the config when that is absent.
        #[arg(long)]
        partition: Option<PathBuf>,
    },
    /// Train several architectures on identical data and seeds.
    Compare {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        partition: Option<PathBuf>,
        /// Comma-separated catalog names.
        #[arg(long, value_delimiter = ',')]
        models: Option<Vec<String>>,
    },
    /// Train the bidirectional n-gram phoneme LM on training transcripts.
    LmTrain {
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Partition directory; the LM sees only its training ids. Without
        /// one (and no `<data>/partition`), every transcript is used.
        #[arg(long)]
        partition: Option<PathBuf>,
        #[arg(long, default_value_t = DEFAULT_SMOOTHING)]
        k: f64,
        #[arg(long, default_value_t = DEFAULT_MU)]
        mu: f64,
    },
    /// Decode utterances with a trained checkpoint.
    Decode {
        #[arg(long)]
        ckpt: PathBuf,
        #[arg(long)]
        data: PathBuf,
        #[arg(long, default_value_t = rcnn_core::ctc::DEFAULT_BEAM_WIDTH)]
        beam: usize,
        #[arg(long)]
        lm: Option<PathBuf>,
        #[arg(long, requires = "lm", default_value_t = rcnn_core::ctc::DEFAULT_LM_WEIGHT)]
        lambda: f64,
        /// File of utterance ids to decode (e.g. a partition's test.txt);
        /// every utterance when omitted.
        #[arg(long)]
        ids: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Score hypotheses against reference transcripts (PER CSV).
    Score {
        /// Corpus directory holding `phn/` (and optionally `alphabet.txt`).
        #[arg(long)]
        refs: PathBuf,
        #[arg(long)]
        hyps: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Print a catalog architecture (or list the catalog).
    Catalog { name: Option<String> },
}

/// A failure with its exit code.
enum CliError {
    Usage(String),
    Data(String),
    Numeric(String),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Data(_) => 2,
            CliError::Numeric(_) => 3,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(m) | CliError::Data(m) | CliError::Numeric(m) => f.write_str(m),
        }
    }
}

fn data_err(e: impl fmt::Display) -> CliError {
    CliError::Data(e.to_string())
}

impl From<TrainError> for CliError {
    fn from(e: TrainError) -> Self {
        match e {
            TrainError::Config(_) => CliError::Usage(e.to_string()),
            e if e.is_numeric() => CliError::Numeric(e.to_string()),
            e => CliError::Data(e.to_string()),
        }
    }
}

type CliResult = Result<(), CliError>;

fn require_dir(path: &Path, what: &str) -> CliResult {
    if path.is_dir() {
        Ok(())
    } else {
        Err(CliError::Usage(format!(
            "{what} `{}` is not a directory",
            path.display()
        )))
    }
}

fn require_file(path: &Path, what: &str) -> CliResult {
    if path.is_file() {
        Ok(())
    } else {
        Err(CliError::Usage(format!("{what} `{}` does not exist", path.display())))
    }
}

fn read_config(path: &Path) -> Result<TrainConfig, CliError> {
    require_file(path, "config")?;
    let text = std::fs::read_to_string(path).map_err(data_err)?;
    let cfg = TrainConfig::from_toml(&text).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
    cfg.validate()?;
    Ok(cfg)
}

fn read_ids(path: &Path) -> Result<Vec<String>, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| data_err(format!("{}: {e}", path.display())))?;
    Ok(text.split_whitespace().map(str::to_string).collect())
}

/// The explicit partition, `<data>/partition`, or a proportional split.
fn resolve_partition(corpus: &Corpus, data: &Path, explicit: Option<&Path>, seed: u64) -> Result<Partition, CliError> {
    let dir = explicit
        .map(Path::to_path_buf)
        .unwrap_or_else(|| data.join(PARTITION_DIR));
    let partition = if dir.join("train.txt").is_file() {
        Partition::load(&dir).map_err(data_err)?
    } else if explicit.is_some() {
        return Err(CliError::Usage(format!(
            "partition `{}` has no train.txt",
            dir.display()
        )));
    } else {
        log::info!("no partition found, using a proportional split with seed {seed}");
        let sizes = SplitSizes::proportional(corpus.len());
        make_partitions(&corpus.ids(), sizes, 1, seed)
            .map_err(data_err)?
            .remove(0)
    };
    partition.check_cover(&corpus.ids()).map_err(data_err)?;
    Ok(partition)
}

fn run_synth(spec: Option<PathBuf>, out: PathBuf, n: usize, seed: u64) -> CliResult {
    let spec = match spec {
        Some(path) => {
            require_file(&path, "spec")?;
            let text = std::fs::read_to_string(&path).map_err(data_err)?;
            toml::from_str::<SyntheticSpec>(&text).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?
        }
        None => SyntheticSpec::default(),
    };
    spec.validate().map_err(|e| CliError::Usage(e.to_string()))?;
    let corpus = generate_synthetic(&spec, n, &mut Rng::new(seed)).map_err(data_err)?;
    write_corpus(&out, &corpus).map_err(data_err)?;
    log::info!("wrote {n} utterances to {}", out.display());
    Ok(())
}

fn run_features(data: PathBuf, out: Option<PathBuf>) -> CliResult {
    require_dir(&data, "data")?;
    let corpus = load_corpus(&data).map_err(data_err)?;
    write_corpus(out.as_deref().unwrap_or(&data), &corpus).map_err(data_err)
}

#[allow(clippy::too_many_arguments)]
fn run_partition(
    data: PathBuf,
    out: Option<PathBuf>,
    seed: u64,
    count: usize,
    val: Option<usize>,
    test: Option<usize>,
    config: Option<PathBuf>,
    budget_epochs: usize,
) -> CliResult {
    require_dir(&data, "data")?;
    if count == 0 {
        return Err(CliError::Usage("--count must be at least 1".into()));
    }
    let baseline = config.as_deref().map(read_config).transpose()?;
    let corpus = load_corpus(&data).map_err(data_err)?;
    let n = corpus.len();
    let sizes = match (val, test) {
        (Some(val), Some(test)) => SplitSizes {
            train: n.saturating_sub(val + test),
            val,
            test,
        },
        _ => SplitSizes::proportional(n),
    };
    let candidates = make_partitions(&corpus.ids(), sizes, count, seed).map_err(data_err)?;
    let chosen = match (&baseline, candidates.len()) {
        (Some(cfg), 2..) => select_partition(&corpus, &candidates, cfg, budget_epochs).map_err(data_err)?,
        _ => 0,
    };
    let dir = out.unwrap_or_else(|| data.join(PARTITION_DIR));
    candidates[chosen].save(&dir).map_err(data_err)?;
    log::info!("partition {chosen} of {count} written to {}", dir.display());
    Ok(())
}

fn run_train(config: PathBuf, data: PathBuf, out: PathBuf, partition: Option<PathBuf>) -> CliResult {
    let cfg = read_config(&config)?;
    require_dir(&data, "data")?;
    let corpus = load_corpus(&data).map_err(data_err)?;
    cfg.resolve_network(corpus.alphabet.num_labels())?;
    let part = resolve_partition(&corpus, &data, partition.as_deref(), cfg.seed)?;
    match cfg.precision {
        Precision::F64 => {
            train::<f64>(&cfg, &corpus, &part, Some(&out))?;
        }
        Precision::F32 => {
            train::<f32>(&cfg, &corpus, &part, Some(&out))?;
        }
    }
    Ok(())
}

fn run_compare(
    config: PathBuf,
    data: PathBuf,
    out: PathBuf,
    partition: Option<PathBuf>,
    models: Option<Vec<String>>,
) -> CliResult {
    let cfg = read_config(&config)?;
    require_dir(&data, "data")?;
    let names = models.unwrap_or_else(|| DEFAULT_COMPARE.iter().map(|s| s.to_string()).collect());
    if let Some(bad) = names.iter().find(|n| catalog(n).is_none()) {
        return Err(CliError::Usage(format!("unknown architecture `{bad}`")));
    }
    let corpus = load_corpus(&data).map_err(data_err)?;
    let part = resolve_partition(&corpus, &data, partition.as_deref(), cfg.seed)?;
    let results = match cfg.precision {
        Precision::F64 => compare_architectures::<f64>(&names, &cfg, &corpus, &part, Some(&out))
            .into_iter()
            .map(|c| (c.name, c.outcome.map(|_| ())))
            .collect::<Vec<_>>(),
        Precision::F32 => compare_architectures::<f32>(&names, &cfg, &corpus, &part, Some(&out))
            .into_iter()
            .map(|c| (c.name, c.outcome.map(|_| ())))
            .collect(),
    };
    let mut first_err = None;
    for (name, r) in results {
        if let Err(e) = r {
            first_err.get_or_insert(CliError::from(e));
            eprintln!("{name}: failed");
        }
    }
    first_err.map_or(Ok(()), Err)
}

fn run_lm_train(data: PathBuf, out: PathBuf, partition: Option<PathBuf>, k: f64, mu: f64) -> CliResult {
    require_dir(&data, "data")?;
    let config = LmConfig {
        smoothing: k,
        mu,
        ..LmConfig::default()
    };
    config.validate().map_err(|e| CliError::Usage(e.to_string()))?;
    let (alphabet, transcripts) = read_transcripts(&data)?;
    let dir = partition.clone().unwrap_or_else(|| data.join(PARTITION_DIR));
    let sentences: Vec<PhonemeSequence> = if dir.join("train.txt").is_file() {
        read_ids(&dir.join("train.txt"))?
            .iter()
            .map(|id| {
                transcripts
                    .get(id)
                    .cloned()
                    .ok_or_else(|| data_err(format!("training id `{id}` has no transcript")))
            })
            .collect::<Result<_, _>>()?
    } else if partition.is_some() {
        return Err(CliError::Usage(format!(
            "partition `{}` has no train.txt",
            dir.display()
        )));
    } else {
        transcripts.into_values().collect()
    };
    let model = NgramModel::train(&sentences, &alphabet, config).map_err(data_err)?;
    model.save(&out).map_err(data_err)
}

/// Alphabet and `phn/` transcripts of a corpus directory, without features.
fn read_transcripts(root: &Path) -> Result<(Alphabet, BTreeMap<String, PhonemeSequence>), CliError> {
    let alphabet = match std::fs::read_to_string(root.join(ALPHABET_FILE)) {
        Ok(text) => Alphabet::new(&text.split_whitespace().collect::<Vec<_>>()).map_err(data_err)?,
        Err(_) => Alphabet::timit(),
    };
    let phn = root.join("phn");
    require_dir(&phn, "transcript directory")?;
    let mut out = BTreeMap::new();
    for entry in std::fs::read_dir(&phn).map_err(data_err)? {
        let path = entry.map_err(data_err)?.path();
        if path.extension().and_then(|e| e.to_str()) != Some("txt") {
            continue;
        }
        let id = path
            .file_stem()
            .and_then(|s| s.to_str())
            .unwrap_or_default()
            .to_string();
        let text = std::fs::read_to_string(&path).map_err(data_err)?;
        let labels = alphabet
            .parse(&text)
            .map_err(|e| data_err(format!("{}: {e}", path.display())))?;
        out.insert(id, labels);
    }
    Ok((alphabet, out))
}

#[allow(clippy::too_many_arguments)]
fn run_decode(
    ckpt: PathBuf,
    data: PathBuf,
    beam: usize,
    lm: Option<PathBuf>,
    lambda: f64,
    ids: Option<PathBuf>,
    out: PathBuf,
) -> CliResult {
    if beam == 0 {
        return Err(CliError::Usage("--beam must be at least 1".into()));
    }
    if !lambda.is_finite() || lambda < 0.0 {
        return Err(CliError::Usage(format!(
            "--lambda must be finite and non-negative, got {lambda}"
        )));
    }
    require_file(&ckpt, "checkpoint")?;
    require_dir(&data, "data")?;
    if let Some(path) = &ids {
        require_file(path, "id list")?;
    }
    if let Some(path) = &lm {
        require_file(path, "LM")?;
    }
    let model = TrainedModel::load(&ckpt)?;
    let lm = lm.as_deref().map(NgramModel::load).transpose().map_err(data_err)?;
    let corpus = load_corpus(&data).map_err(data_err)?;
    let selected = match &ids {
        Some(path) => corpus.select(&read_ids(path)?).map_err(data_err)?,
        None => corpus.utterances.iter().collect(),
    };
    if let Some(lm) = &lm {
        if lm.symbols() != corpus.alphabet.symbols() {
            return Err(CliError::Data("LM and corpus alphabets differ".into()));
        }
    }
    let prepared = prepare::<f64>(&selected, &model.stats)?;
    let opts = DecodeOptions {
        beam,
        lm: lm.as_ref().map(|m| (m, lambda)),
    };
    let decoded = decode(&model.network, &model.store, &prepared, corpus.alphabet.blank(), opts)?;
    let mut text = String::new();
    for (id, (score, labels)) in &decoded {
        text.push_str(&format_hypothesis_line(id, *score, labels, &corpus.alphabet));
        text.push('\n');
    }
    std::fs::write(&out, text).map_err(data_err)
}

fn run_score(refs: PathBuf, hyps: PathBuf, out: PathBuf) -> CliResult {
    require_dir(&refs, "refs")?;
    require_file(&hyps, "hypotheses")?;
    let (alphabet, transcripts) = read_transcripts(&refs)?;
    let text = std::fs::read_to_string(&hyps).map_err(data_err)?;
    let mut hyp_map = BTreeMap::new();
    for (i, line) in text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty()) {
        let (id, _, labels) = parse_hypothesis_line(line, &alphabet)
            .map_err(|e| data_err(format!("{}:{}: {e}", hyps.display(), i + 1)))?;
        hyp_map.insert(id, labels);
    }
    // Score exactly the decoded utterances.
    let ref_map: BTreeMap<String, PhonemeSequence> = transcripts
        .into_iter()
        .filter(|(id, _)| hyp_map.contains_key(id))
        .collect();
    let report = per(&ref_map, &hyp_map).map_err(data_err)?;
    std::fs::write(&out, report.to_csv()).map_err(data_err)?;
    println!("PER {:.4}", report.aggregate());
    Ok(())
}

fn run_catalog(name: Option<String>) -> CliResult {
    match name {
        None => {
            for n in CATALOG_NAMES {
                println!("{n}");
            }
        }
        Some(n) => {
            let cfg = catalog(&n).ok_or_else(|| CliError::Usage(format!("unknown architecture `{n}`")))?;
            print!("{}", cfg.to_text());
        }
    }
    Ok(())
}

fn run(cli: Cli) -> CliResult {
    match cli.command {
        Command::Synth { spec, out, n, seed } => run_synth(spec, out, n, seed),
        Command::Features { data, out } => run_features(data, out),
        Command::Partition {
            data,
            out,
            seed,
            count,
            val,
            test,
            config,
            budget_epochs,
        } => run_partition(data, out, seed, count, val, test, config, budget_epochs),
        Command::Train {
            config,
            data,
            out,
            partition,
        } => run_train(config, data, out, partition),
        Command::Compare {
            config,
            data,
            out,
            partition,
            models,
        } => run_compare(config, data, out, partition, models),
        Command::LmTrain {
            data,
            out,
            partition,
            k,
            mu,
        } => run_lm_train(data, out, partition, k, mu),
        Command::Decode {
            ckpt,
            data,
            beam,
            lm,
            lambda,
            ids,
            out,
        } => run_decode(ckpt, data, beam, lm, lambda, ids, out),
        Command::Score { refs, hyps, out } => run_score(refs, hyps, out),
        Command::Catalog { name } => run_catalog(name),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.code())
        }
    }
}
