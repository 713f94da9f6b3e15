use std::fmt::Write as _;
use std::path::Path;

use super::TrainError;

pub const CURVE_HEADER: &str = "epoch,wall_clock_minutes,train_cost,val_cost,val_per";

/// One row per finished epoch.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CurveRow {
    pub epoch: usize,
    pub wall_clock_minutes: f64,
    /// Mean per-utterance training loss over the epoch (dropout active).
    pub train_cost: f64,
    /// Mean validation loss in inference mode; NaN without validation data.
    pub val_cost: f64,
    /// Greedy-decode PER on validation; NaN without validation data.
    pub val_per: f64,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct CostCurve {
    pub rows: Vec<CurveRow>,
}

impl CostCurve {
    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// Everything but the wall-clock column, which is machine-dependent.
    pub fn costs(&self) -> Vec<(usize, f64, f64, f64)> {
        self.rows
            .iter()
            .map(|r| (r.epoch, r.train_cost, r.val_cost, r.val_per))
            .collect()
    }

    pub fn to_csv(&self) -> String {
        let mut out = format!("{CURVE_HEADER}\n");
        for r in &self.rows {
            let _ = writeln!(
                out,
                "{},{},{},{},{}",
                r.epoch, r.wall_clock_minutes, r.train_cost, r.val_cost, r.val_per
            );
        }
        out
    }

    pub fn parse_csv(text: &str) -> Result<Self, TrainError> {
        let mut lines = text.lines();
        if lines.next().map(str::trim) != Some(CURVE_HEADER) {
            return Err(TrainError::Config(format!(
                "cost curve must start with `{CURVE_HEADER}`"
            )));
        }
        let rows = lines
            .enumerate()
            .filter(|(_, l)| !l.trim().is_empty())
            .map(|(i, l)| {
                let f: Vec<&str> = l.split(',').collect();
                let bad = || TrainError::Config(format!("cost curve line {}: `{l}`", i + 2));
                if f.len() != 5 {
                    return Err(bad());
                }
                let num = |s: &str| s.trim().parse::<f64>().map_err(|_| bad());
                Ok(CurveRow {
                    epoch: f[0].trim().parse().map_err(|_| bad())?,
                    wall_clock_minutes: num(f[1])?,
                    train_cost: num(f[2])?,
                    val_cost: num(f[3])?,
                    val_per: num(f[4])?,
                })
            })
            .collect::<Result<Vec<_>, _>>()?;
        Ok(CostCurve { rows })
    }

    pub fn save(&self, path: &Path) -> Result<(), TrainError> {
        std::fs::write(path, self.to_csv())?;
        Ok(())
    }
}
