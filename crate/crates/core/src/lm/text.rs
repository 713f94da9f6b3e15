//! Plain-text LM format:
//!
//! ```text
//! #rcnn-lm 1
//! symbols p0 p1 p2
//! k 1
//! weights 0.4 0.35 0.25
//! mu 0.5
//! 2 f <s> p0 3
//! …
//! ```
//!
//! Count lines are `N DIR context... symbol count`, sorted by order, then
//! direction (`b` before `f`), then by the textual context and symbol, so two
//! models trained on the same data produce identical files.

use std::path::Path;

use super::ngram::{ContextCounts, Direction, NgramModel, Token, ORDERS};
use super::{LmConfig, LmError, END, START, UNKNOWN};

const HEADER: &str = "#rcnn-lm 1";

impl NgramModel {
    pub fn to_text(&self) -> String {
        let mut lines: Vec<(usize, &str, Vec<&str>, &str, u64)> = Vec::new();
        for dir in [Direction::Forward, Direction::Backward] {
            for (slot, &n) in ORDERS.iter().enumerate() {
                for (ctx, cc) in &self.tables[dir as usize][slot] {
                    let names: Vec<&str> = ctx.iter().map(|&t| self.token_name(t)).collect();
                    for (&v, &c) in &cc.next {
                        lines.push((n, dir.tag(), names.clone(), self.token_name(v), c));
                    }
                }
            }
        }
        lines.sort();
        let fmt_f = |v: &[f64]| v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(" ");
        let mut out = format!(
            "{HEADER}\nsymbols {}\nk {}\nweights {}\nmu {}\n",
            self.symbols.join(" "),
            self.config.smoothing,
            fmt_f(&self.config.weights),
            self.config.mu
        );
        for (n, dir, ctx, v, c) in lines {
            out.push_str(&format!("{n} {dir} {} {v} {c}\n", ctx.join(" ")));
        }
        out
    }

    pub fn parse(text: &str) -> Result<Self, LmError> {
        let err = |line: usize, msg: String| LmError::Parse { line, msg };
        let mut lines = text
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l.trim()))
            .filter(|(_, l)| !l.is_empty());
        let mut field = |name: &str| -> Result<(usize, Vec<String>), LmError> {
            let (no, line) = lines.next().ok_or_else(|| err(0, format!("missing `{name}` line")))?;
            let mut toks = line.split_whitespace();
            if toks.next() != Some(name) {
                return Err(err(no, format!("expected `{name}`, found `{line}`")));
            }
            Ok((no, toks.map(str::to_string).collect()))
        };
        let (no, version) = field("#rcnn-lm")?;
        if version != ["1"] {
            return Err(err(no, format!("unsupported LM format version {version:?}")));
        }
        let (_, symbols) = field("symbols")?;
        let parse_f = |no: usize, toks: &[String]| -> Result<Vec<f64>, LmError> {
            toks.iter()
                .map(|t| t.parse::<f64>().map_err(|e| err(no, format!("`{t}`: {e}"))))
                .collect()
        };
        let (no, k) = field("k")?;
        let k = parse_f(no, &k)?;
        let (no, w) = field("weights")?;
        let w = parse_f(no, &w)?;
        let (no, mu) = field("mu")?;
        let mu = parse_f(no, &mu)?;
        let ([k], [w2, w3, w4], [mu]) = (&k[..], &w[..], &mu[..]) else {
            return Err(err(no, "k, weights and mu take 1, 3 and 1 values".into()));
        };
        let config = LmConfig {
            smoothing: *k,
            weights: [*w2, *w3, *w4],
            mu: *mu,
        };
        config.validate()?;
        let mut model = NgramModel {
            symbols: symbols.clone(),
            config,
            tables: Default::default(),
        };
        let n_sym = symbols.len();
        let token = |no: usize, name: &str| -> Result<Token, LmError> {
            match name {
                UNKNOWN => Ok(n_sym),
                END => Ok(n_sym + 1),
                START => Ok(n_sym + 2),
                _ => symbols
                    .iter()
                    .position(|s| s == name)
                    .ok_or_else(|| err(no, format!("unknown symbol `{name}`"))),
            }
        };
        for (no, line) in lines {
            let toks: Vec<&str> = line.split_whitespace().collect();
            let n: usize = toks
                .first()
                .and_then(|t| t.parse().ok())
                .filter(|n| ORDERS.contains(n))
                .ok_or_else(|| err(no, format!("bad order in `{line}`")))?;
            if toks.len() != n + 3 {
                return Err(err(
                    no,
                    format!("order-{n} line needs {} fields, found {}", n + 3, toks.len()),
                ));
            }
            let dir = match toks[1] {
                "f" => Direction::Forward,
                "b" => Direction::Backward,
                d => return Err(err(no, format!("direction must be `f` or `b`, found `{d}`"))),
            };
            let ctx = toks[2..n + 1]
                .iter()
                .map(|t| token(no, t))
                .collect::<Result<Vec<_>, _>>()?;
            let v = token(no, toks[n + 1])?;
            let count: u64 = toks[n + 2].parse().map_err(|e| err(no, format!("count: {e}")))?;
            let entry: &mut ContextCounts = model.tables[dir as usize][n - 2].entry(ctx).or_default();
            if entry.next.insert(v, count).is_some() {
                return Err(err(no, "duplicate n-gram".into()));
            }
            entry.total += count;
        }
        Ok(model)
    }

    pub fn save(&self, path: &Path) -> Result<(), LmError> {
        std::fs::write(path, self.to_text())?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self, LmError> {
        Self::parse(&std::fs::read_to_string(path)?)
    }
}
