//! Experiment outputs: assertion summaries, long-format CSV series, and the
//! frozen-ceilings file. Data artifacts are byte-deterministic for a fixed
//! seed; wall-clock metadata lives in a separate meta file.

use crate::error::{CliError, Result};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::path::Path;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Assertion {
    pub name: String,
    pub measured: f64,
    pub bound: f64,
    /// "max" when measured must stay <= bound, "min" for >=.
    pub direction: String,
    pub pass: bool,
}

impl Assertion {
    pub fn at_most(name: &str, measured: f64, bound: f64) -> Assertion {
        Assertion {
            name: name.into(),
            measured,
            bound,
            direction: "max".into(),
            pass: measured <= bound,
        }
    }

    pub fn at_least(name: &str, measured: f64, bound: f64) -> Assertion {
        Assertion {
            name: name.into(),
            measured,
            bound,
            direction: "min".into(),
            pass: measured >= bound,
        }
    }
}

/// Long-format series table: (series, x, y) rows.
#[derive(Debug, Clone, Default)]
pub struct SeriesTable {
    rows: Vec<(String, f64, f64)>,
}

impl SeriesTable {
    pub fn push(&mut self, series: &str, x: f64, y: f64) {
        self.rows.push((series.into(), x, y));
    }

    pub fn extend_curve<'a>(
        &mut self,
        series: &str,
        points: impl IntoIterator<Item = (&'a f64, &'a f64)>,
    ) {
        for (x, y) in points {
            self.push(series, *x, *y);
        }
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("series,x,y\n");
        for (s, x, y) in &self.rows {
            out.push_str(&format!("{s},{x},{y}\n"));
        }
        out
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunSummary {
    pub experiment: String,
    pub seed: u64,
    pub config: BTreeMap<String, String>,
    pub ceilings_used: BTreeMap<String, f64>,
    pub assertions: Vec<Assertion>,
    pub all_pass: bool,
    /// Experiment-specific measurements (fits, norms, diagnostics).
    pub details: serde_json::Value,
}

impl RunSummary {
    pub fn new(experiment: &str, seed: u64, config: BTreeMap<String, String>) -> RunSummary {
        RunSummary {
            experiment: experiment.into(),
            seed,
            config,
            ceilings_used: BTreeMap::new(),
            assertions: Vec::new(),
            all_pass: true,
            details: serde_json::Value::Null,
        }
    }

    pub fn push(&mut self, a: Assertion) {
        self.all_pass &= a.pass;
        self.assertions.push(a);
    }
}

/// Frozen inequality ceilings consumed by regression runs.
pub type Ceilings = BTreeMap<String, f64>;

pub fn load_ceilings(path: &Path) -> Result<Ceilings> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Ceilings(format!("cannot read {}: {e}", path.display())))?;
    Ok(serde_json::from_str(&text)?)
}

pub fn store_ceilings(path: &Path, ceilings: &Ceilings) -> Result<()> {
    std::fs::write(path, serde_json::to_string_pretty(ceilings)? + "\n")?;
    Ok(())
}

/// Write summary.json, series.csv and meta.json under `dir`.
pub fn write_outputs(dir: &Path, summary: &RunSummary, series: &SeriesTable) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    std::fs::write(
        dir.join("summary.json"),
        serde_json::to_string_pretty(summary)? + "\n",
    )?;
    std::fs::write(dir.join("series.csv"), series.to_csv())?;
    let meta = serde_json::json!({
        "written_unix_ms": std::time::SystemTime::now()
            .duration_since(std::time::UNIX_EPOCH)
            .map(|d| d.as_millis() as u64)
            .unwrap_or(0),
    });
    std::fs::write(dir.join("meta.json"), serde_json::to_string_pretty(&meta)? + "\n")?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_series_still_has_header() {
        let t = SeriesTable::default();
        assert_eq!(t.to_csv(), "series,x,y\n");
    }

    #[test]
    fn assertions_update_the_verdict() {
        let mut s = RunSummary::new("demo", 1, BTreeMap::new());
        s.push(Assertion::at_most("a", 1.0, 2.0));
        assert!(s.all_pass);
        s.push(Assertion::at_least("b", 1.0, 2.0));
        assert!(!s.all_pass);
    }
}
