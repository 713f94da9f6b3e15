//! Corpus directory layout:
//!
//! ```text
//! root/alphabet.txt      optional; whitespace-separated symbols (TIMIT phones if absent)
//! root/wav/<id>.wav      16-bit mono 16 kHz audio, features extracted on load
//! root/feat/<id>.txt     feature dump (`T W` header + rows), preferred over wav
//! root/phn/<id>.txt      whitespace-separated phoneme symbols
//! ```

use std::collections::BTreeSet;
use std::path::Path;

use rayon::prelude::*;

use super::{Corpus, CorpusError, Utterance};
use crate::ctc::{Alphabet, PhonemeSequence};
use crate::features::{format_feature_dump, load_feature_dump, read_wav, MfccExtractor, SAMPLE_RATE};
use crate::numerics::Tensor;

pub const ALPHABET_FILE: &str = "alphabet.txt";

fn stems(dir: &Path, ext: &str) -> Result<BTreeSet<String>, CorpusError> {
    let mut out = BTreeSet::new();
    if !dir.is_dir() {
        return Ok(out);
    }
    for entry in std::fs::read_dir(dir)? {
        let path = entry?.path();
        if path.extension().and_then(|e| e.to_str()) == Some(ext) {
            if let Some(stem) = path.file_stem().and_then(|s| s.to_str()) {
                out.insert(stem.to_string());
            }
        }
    }
    Ok(out)
}

fn read_alphabet(root: &Path) -> Result<Alphabet, CorpusError> {
    let path = root.join(ALPHABET_FILE);
    if !path.exists() {
        return Ok(Alphabet::timit());
    }
    let text = std::fs::read_to_string(&path)?;
    let symbols: Vec<&str> = text.split_whitespace().collect();
    Ok(Alphabet::new(&symbols)?)
}

fn read_transcript(path: &Path, alphabet: &Alphabet) -> Result<PhonemeSequence, CorpusError> {
    let file = path.display().to_string();
    let text = std::fs::read_to_string(path)?;
    let mut labels = Vec::new();
    for tok in text.split_whitespace() {
        let idx = alphabet.index_of(tok).ok_or_else(|| CorpusError::UnknownSymbol {
            file: file.clone(),
            symbol: tok.to_string(),
        })?;
        labels.push(idx);
    }
    if labels.is_empty() {
        return Err(CorpusError::Parse {
            file,
            line: 1,
            msg: "transcript is empty".into(),
        });
    }
    Ok(labels)
}

fn load_features(
    root: &Path,
    id: &str,
    from_dump: bool,
    extractor: &MfccExtractor,
) -> Result<Tensor<f64>, CorpusError> {
    let path = if from_dump {
        root.join("feat").join(format!("{id}.txt"))
    } else {
        root.join("wav").join(format!("{id}.wav"))
    };
    let wrap = |source| CorpusError::Features {
        path: path.display().to_string(),
        source,
    };
    if from_dump {
        load_feature_dump(&path).map_err(wrap)
    } else {
        let clip = read_wav(&path).map_err(wrap)?;
        extractor.extract(&clip).map_err(wrap)
    }
}

/// Loads every utterance under `root`, extracting features from WAV files in
/// parallel when no dump exists. Utterances too short for their transcript
/// are kept but flagged infeasible.
pub fn load_corpus(root: &Path) -> Result<Corpus, CorpusError> {
    let alphabet = read_alphabet(root)?;
    let dumps = stems(&root.join("feat"), "txt")?;
    let wavs = stems(&root.join("wav"), "wav")?;
    let transcripts = stems(&root.join("phn"), "txt")?;
    let ids: Vec<String> = dumps.union(&wavs).cloned().collect();
    if ids.is_empty() {
        log::warn!("{}: no audio or feature files, corpus is empty", root.display());
        return Ok(Corpus::new(alphabet, Vec::new()));
    }
    if let Some(id) = ids.iter().find(|id| !transcripts.contains(*id)) {
        return Err(CorpusError::MissingTranscript(id.clone()));
    }
    for orphan in transcripts.iter().filter(|t| !dumps.contains(*t) && !wavs.contains(*t)) {
        log::warn!("transcript `{orphan}` has no audio or features, ignored");
    }
    let extractor = MfccExtractor::new(SAMPLE_RATE).expect("16 kHz is a valid rate");
    let utterances = ids
        .par_iter()
        .map(|id| {
            let labels = read_transcript(&root.join("phn").join(format!("{id}.txt")), &alphabet)?;
            let features = load_features(root, id, dumps.contains(id), &extractor)?;
            let utt = Utterance::new(id.clone(), features, labels);
            if !utt.feasible {
                log::warn!(
                    "utterance `{id}`: {} frames cannot carry {} labels under CTC, flagged infeasible",
                    utt.frames(),
                    utt.labels.len()
                );
            }
            Ok(utt)
        })
        .collect::<Result<Vec<_>, CorpusError>>()?;
    Ok(Corpus::new(alphabet, utterances))
}

/// Writes `corpus` as feature dumps plus transcripts and the alphabet file.
pub fn write_corpus(root: &Path, corpus: &Corpus) -> Result<(), CorpusError> {
    let (feat, phn) = (root.join("feat"), root.join("phn"));
    std::fs::create_dir_all(&feat)?;
    std::fs::create_dir_all(&phn)?;
    std::fs::write(
        root.join(ALPHABET_FILE),
        format!("{}\n", corpus.alphabet.symbols().join(" ")),
    )?;
    for u in &corpus.utterances {
        let dump = format_feature_dump(&u.features).map_err(|source| CorpusError::Features {
            path: u.id.clone(),
            source,
        })?;
        std::fs::write(feat.join(format!("{}.txt", u.id)), dump)?;
        std::fs::write(
            phn.join(format!("{}.txt", u.id)),
            format!("{}\n", corpus.alphabet.render(&u.labels)),
        )?;
    }
    Ok(())
}
