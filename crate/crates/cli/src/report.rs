//! Check rows, the JSON report and the CSV table.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use anyhow::Context;
use serde::{Deserialize, Serialize};

use crate::scenario::Scenario;

pub const CSV_COLUMNS: [&str; 7] = ["check_id", "anchor", "measured", "bound", "ratio", "pass", "seed"];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Row {
    pub check_id: String,
    /// Name of the property being checked.
    pub anchor: String,
    pub measured: f64,
    pub bound: f64,
    pub ratio: f64,
    pub pass: bool,
    pub seed: u64,
    /// A failing hard row makes the run fail.
    pub hard: bool,
}

impl Row {
    fn new(id: impl Into<String>, anchor: &str, measured: f64, bound: f64, pass: bool, hard: bool) -> Self {
        let ratio = if bound != 0.0 {
            measured / bound
        } else if measured == 0.0 {
            0.0
        } else {
            f64::INFINITY
        };
        Row {
            check_id: id.into(),
            anchor: anchor.to_string(),
            // no signed zeros in the tables
            measured: measured + 0.0,
            bound: bound + 0.0,
            ratio,
            pass,
            seed: 0,
            hard,
        }
    }

    /// Hard check that `measured ≤ bound`.
    pub fn at_most(id: impl Into<String>, anchor: &str, measured: f64, bound: f64) -> Self {
        Row::new(id, anchor, measured, bound, measured <= bound, true)
    }

    /// Hard check that `measured ≥ bound`.
    pub fn at_least(id: impl Into<String>, anchor: &str, measured: f64, bound: f64) -> Self {
        Row::new(id, anchor, measured, bound, measured >= bound, true)
    }

    /// Hard boolean check, recorded as 1 against 1.
    pub fn flag(id: impl Into<String>, anchor: &str, ok: bool) -> Self {
        Row::new(id, anchor, if ok { 1.0 } else { 0.0 }, 1.0, ok, true)
    }

    /// A recorded quantity that never fails the run.
    pub fn record(id: impl Into<String>, anchor: &str, measured: f64, bound: f64) -> Self {
        Row::new(id, anchor, measured, bound, true, false)
    }

    pub fn soft(mut self) -> Self {
        self.hard = false;
        self
    }
}

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
pub struct Report {
    pub scenario: Scenario,
    pub rows: Vec<Row>,
    /// Per suite: curves, certificates and fitted constants.
    pub details: BTreeMap<String, serde_json::Value>,
}

impl Report {
    pub fn new(scenario: Scenario) -> Self {
        Report {
            scenario,
            rows: Vec::new(),
            details: BTreeMap::new(),
        }
    }

    pub fn push(&mut self, mut row: Row) {
        row.seed = self.scenario.seed;
        self.rows.push(row);
    }

    pub fn hard_failures(&self) -> Vec<&Row> {
        self.rows.iter().filter(|r| r.hard && !r.pass).collect()
    }

    pub fn to_json(&self) -> anyhow::Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn to_csv(&self) -> anyhow::Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(CSV_COLUMNS)?;
        for r in &self.rows {
            w.write_record([
                r.check_id.clone(),
                r.anchor.clone(),
                fmt_num(r.measured),
                fmt_num(r.bound),
                fmt_num(r.ratio),
                r.pass.to_string(),
                r.seed.to_string(),
            ])?;
        }
        Ok(String::from_utf8(w.into_inner()?)?)
    }

    /// Write `report.json` and `checks.csv` into `dir`.
    pub fn write(&self, dir: &Path) -> anyhow::Result<()> {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
        fs::write(dir.join("report.json"), self.to_json()?).context("writing report.json")?;
        fs::write(dir.join("checks.csv"), self.to_csv()?).context("writing checks.csv")?;
        Ok(())
    }

    /// One line per row, for terminals.
    pub fn summary(&self) -> String {
        let mut out = String::new();
        for r in &self.rows {
            let tag = match (r.pass, r.hard) {
                (true, _) => "ok  ",
                (false, true) => "FAIL",
                (false, false) => "warn",
            };
            out.push_str(&format!(
                "{tag} {:<44} {:>14} {:>14}\n",
                r.check_id,
                fmt_num(r.measured),
                fmt_num(r.bound)
            ));
        }
        let fails = self.hard_failures().len();
        out.push_str(&format!("{} checks, {} hard failures\n", self.rows.len(), fails));
        out
    }
}

fn fmt_num(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.10e}")
    } else if v.is_nan() {
        "nan".to_string()
    } else if v > 0.0 {
        "inf".to_string()
    } else {
        "-inf".to_string()
    }
}
