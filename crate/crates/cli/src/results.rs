//! In-memory results of a scenario run.

use std::collections::BTreeMap;

use mclab_core::report::ext_real;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::scenario::Mode;

pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

/// Lowercase hex SHA-256 of `bytes`.
pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// One measured quantity of one grid point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Row {
    pub grid_index: usize,
    pub family: String,
    pub size: usize,
    pub trial: usize,
    /// `<index>:<kind>` of the analysis in the scenario.
    pub analysis: String,
    pub quantity: String,
    #[serde(with = "ext_real")]
    pub value: f64,
}

impl Row {
    pub const CSV_HEADER: &'static str = "grid_index,family,size,trial,analysis,quantity,value";
}

/// Statistics of one quantity over the trials at one size.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryStat {
    pub analysis: String,
    pub quantity: String,
    pub size: usize,
    pub count: usize,
    /// Values that are infinite or NaN (e.g. a merging time not reached).
    pub non_finite: usize,
    #[serde(with = "ext_real")]
    pub median: f64,
    #[serde(with = "ext_real")]
    pub min: f64,
    #[serde(with = "ext_real")]
    pub max: f64,
}

/// A named verdict. Only asserted checks decide the exit status.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub asserted: bool,
    pub passed: bool,
    pub detail: String,
}

/// A labelled `(x, y)` curve for plotting.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Series {
    pub label: String,
    #[serde(with = "ext_real::vec")]
    pub x: Vec<f64>,
    #[serde(with = "ext_real::vec")]
    pub y: Vec<f64>,
}

/// A full analysis report kept alongside the rows (witness words and the like).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Artifact {
    pub grid_index: usize,
    pub analysis: String,
    pub report: serde_json::Value,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultSet {
    pub scenario: String,
    /// SHA-256 of the exact configuration bytes.
    pub scenario_hash: String,
    /// `--seed`, `--budget-nodes` and similar command-line overrides.
    pub overrides: BTreeMap<String, String>,
    pub tool_version: String,
    pub seed: u64,
    pub mode: Mode,
    pub rows: Vec<Row>,
    pub summary: Vec<SummaryStat>,
    pub checks: Vec<Check>,
    pub series: Vec<Series>,
    pub artifacts: Vec<Artifact>,
}

impl ResultSet {
    pub fn empty(scenario: &str, scenario_hash: &str, seed: u64, mode: Mode) -> Self {
        Self {
            scenario: scenario.to_string(),
            scenario_hash: scenario_hash.to_string(),
            overrides: BTreeMap::new(),
            tool_version: TOOL_VERSION.to_string(),
            seed,
            mode,
            rows: Vec::new(),
            summary: Vec::new(),
            checks: Vec::new(),
            series: Vec::new(),
            artifacts: Vec::new(),
        }
    }

    /// Whether every asserted check passed.
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed || !c.asserted)
    }

    pub fn failed_checks(&self) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(|c| c.asserted && !c.passed)
    }

    /// Values of `quantity` from `analysis` at `size`, in grid order.
    pub fn values(&self, analysis: &str, quantity: &str, size: usize) -> Vec<f64> {
        self.rows
            .iter()
            .filter(|r| r.analysis == analysis && r.quantity == quantity && r.size == size)
            .map(|r| r.value)
            .collect()
    }

    pub fn stat(&self, analysis: &str, quantity: &str, size: usize) -> Option<&SummaryStat> {
        self.summary.iter().find(|s| s.analysis == analysis && s.quantity == quantity && s.size == size)
    }

    /// Recomputes `summary` from `rows`, grouped by (analysis, quantity, size).
    pub fn summarize(&mut self) {
        let mut groups: BTreeMap<(String, String, usize), Vec<f64>> = BTreeMap::new();
        for r in &self.rows {
            groups.entry((r.analysis.clone(), r.quantity.clone(), r.size)).or_default().push(r.value);
        }
        self.summary = groups
            .into_iter()
            .map(|((analysis, quantity, size), mut values)| {
                values.sort_by(f64::total_cmp);
                SummaryStat {
                    analysis,
                    quantity,
                    size,
                    count: values.len(),
                    non_finite: values.iter().filter(|v| !v.is_finite()).count(),
                    median: median_sorted(&values),
                    min: values[0],
                    max: values[values.len() - 1],
                }
            })
            .collect();
    }
}

/// Median of sorted values; the mean of the two middle values for even counts.
pub fn median_sorted(values: &[f64]) -> f64 {
    let n = values.len();
    if n == 0 {
        return f64::NAN;
    }
    if n % 2 == 1 {
        values[n / 2]
    } else {
        let (a, b) = (values[n / 2 - 1], values[n / 2]);
        if a == b {
            a
        } else {
            0.5 * (a + b)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn medians() {
        assert_eq!(median_sorted(&[1.0, 2.0, 10.0]), 2.0);
        assert_eq!(median_sorted(&[1.0, 2.0, 4.0, 10.0]), 3.0);
        assert_eq!(median_sorted(&[1.0, f64::INFINITY]), f64::INFINITY);
        assert_eq!(median_sorted(&[f64::INFINITY, f64::INFINITY]), f64::INFINITY);
    }

    #[test]
    fn hash_is_hex_sha256() {
        assert_eq!(sha256_hex(b"abc"), "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
    }

    #[test]
    fn summary_groups_rows() {
        let mut r = ResultSet::empty("s", "h", 0, Mode::Report);
        for (trial, v) in [3.0, 1.0, f64::INFINITY].into_iter().enumerate() {
            r.rows.push(Row {
                grid_index: trial,
                family: "f".into(),
                size: 4,
                trial,
                analysis: "0:merging".into(),
                quantity: "merging_time".into(),
                value: v,
            });
        }
        r.summarize();
        let s = r.stat("0:merging", "merging_time", 4).unwrap();
        assert_eq!((s.count, s.non_finite, s.median, s.min), (3, 1, 3.0, 1.0));
    }
}
