use std::collections::HashMap;

use super::CtcError;

/// The 61 TIMIT phone symbols, in the order used for label indices.
pub const TIMIT_PHONES: [&str; 61] = [
    "aa", "ae", "ah", "ao", "aw", "ax", "ax-h", "axr", "ay", "b", "bcl", "ch", "d", "dcl", "dh", "dx", "eh", "el",
    "em", "en", "eng", "epi", "er", "ey", "f", "g", "gcl", "h#", "hh", "hv", "ih", "ix", "iy", "jh", "k", "kcl", "l",
    "m", "n", "ng", "nx", "ow", "oy", "p", "pau", "pcl", "q", "r", "s", "sh", "t", "tcl", "th", "uh", "uw", "ux", "v",
    "w", "y", "z", "zh",
];

/// Utterance-level label sequence (indices into an [`Alphabet`], never blank).
pub type PhonemeSequence = Vec<usize>;

/// Ordered non-blank symbols; the CTC blank is the index after the last symbol.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Alphabet {
    symbols: Vec<String>,
    index: HashMap<String, usize>,
}

impl Alphabet {
    pub fn new<S: AsRef<str>>(symbols: &[S]) -> Result<Self, CtcError> {
        let symbols: Vec<String> = symbols.iter().map(|s| s.as_ref().to_string()).collect();
        if symbols.is_empty() {
            return Err(CtcError::EmptyAlphabet);
        }
        let mut index = HashMap::with_capacity(symbols.len());
        for (i, s) in symbols.iter().enumerate() {
            if s.is_empty() || s.chars().any(char::is_whitespace) {
                return Err(CtcError::BadSymbol(s.clone()));
            }
            if index.insert(s.clone(), i).is_some() {
                return Err(CtcError::DuplicateSymbol(s.clone()));
            }
        }
        Ok(Alphabet { symbols, index })
    }

    /// 61 TIMIT phones plus blank: 62 labels.
    pub fn timit() -> Self {
        Self::new(&TIMIT_PHONES).expect("TIMIT phone list is valid")
    }

    /// `p0 … p{n-1}`, used by synthetic corpora.
    pub fn synthetic(n: usize) -> Self {
        let syms: Vec<String> = (0..n).map(|i| format!("p{i}")).collect();
        Self::new(&syms).expect("synthetic symbols are unique")
    }

    /// Number of non-blank symbols.
    pub fn len(&self) -> usize {
        self.symbols.len()
    }

    pub fn is_empty(&self) -> bool {
        self.symbols.is_empty()
    }

    pub fn blank(&self) -> usize {
        self.symbols.len()
    }

    /// Non-blank symbols plus blank.
    pub fn num_labels(&self) -> usize {
        self.symbols.len() + 1
    }

    pub fn symbols(&self) -> &[String] {
        &self.symbols
    }

    pub fn index_of(&self, symbol: &str) -> Option<usize> {
        self.index.get(symbol).copied()
    }

    pub fn symbol(&self, idx: usize) -> &str {
        self.symbols.get(idx).map_or("<blank>", String::as_str)
    }

    /// Parses whitespace-separated symbols.
    pub fn parse(&self, text: &str) -> Result<PhonemeSequence, CtcError> {
        text.split_whitespace()
            .map(|s| self.index_of(s).ok_or_else(|| CtcError::UnknownSymbol(s.to_string())))
            .collect()
    }

    pub fn render(&self, seq: &[usize]) -> String {
        seq.iter().map(|&i| self.symbol(i)).collect::<Vec<_>>().join(" ")
    }
}
