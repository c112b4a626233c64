use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::config::CostBasis;
use crate::error::{Error, Result};

/// Everything needed to rerun an experiment and get the same report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub format: String,
    pub crate_version: String,
    pub config_sha256: String,
    pub master_seed: u64,
    pub seeds: Vec<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolicyInfo {
    pub name: String,
    pub kind: String,
}

/// One policy on one cell, across seeds. Costs are episode totals.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolicyResult {
    pub policy: String,
    pub mean_regret: f64,
    pub stderr_regret: f64,
    pub mean_expected_cost: f64,
    pub mean_realized_cost: f64,
    pub regrets: Vec<f64>,
    pub expected_costs: Vec<f64>,
    pub realized_costs: Vec<f64>,
    /// Switch period per seed, for policies that can abandon the predictions.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub switch_periods: Option<Vec<Option<usize>>>,
}

/// One instance at one horizon. Measured exponents are seed averages.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellReport {
    pub instance: String,
    /// Position within a generated batch.
    pub index: Option<usize>,
    pub horizon: usize,
    pub label: String,
    pub v_true: Option<f64>,
    pub a_true: Option<f64>,
    pub history_v: Option<f64>,
    pub measured_v: f64,
    pub measured_a: Option<f64>,
    /// Unclamped `ln(V) / ln(T)`; keeps the ordering when the exponent saturates.
    pub raw_v: f64,
    pub raw_a: Option<f64>,
    pub notes: Vec<String>,
    pub results: Vec<PolicyResult>,
    pub gap: Option<f64>,
    /// `ln(cost_pure / cost_nopred)` on the GAP's cost basis.
    pub log_cost_ratio: Option<f64>,
}

impl CellReport {
    pub fn result(&self, policy: &str) -> Option<&PolicyResult> {
        self.results.iter().find(|r| r.policy == policy)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GapSummary {
    pub perp: String,
    pub pure: String,
    pub nopred: String,
    pub cost: CostBasis,
    pub defined: usize,
    pub undefined: usize,
    pub mean: Option<f64>,
    pub median: Option<f64>,
    pub share_below_half: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SlopeFit {
    pub instance: String,
    pub policy: String,
    pub horizons: Vec<usize>,
    pub mean_regrets: Vec<f64>,
    /// Least-squares slope of log regret against log horizon, if defined.
    pub slope: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub provenance: Provenance,
    pub name: String,
    pub policies: Vec<PolicyInfo>,
    pub cells: Vec<CellReport>,
    pub gap: Option<GapSummary>,
    pub slopes: Vec<SlopeFit>,
}

fn opt(x: Option<f64>) -> String {
    x.map(|v| v.to_string()).unwrap_or_default()
}

fn csv_err(path: &Path, e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::io(path, io),
        other => Error::Parse { path: path.to_path_buf(), line: 0, msg: format!("{other:?}") },
    }
}

fn write_rows(path: &Path, header: &[&str], rows: impl Iterator<Item = Vec<String>>) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| csv_err(path, e))?;
    w.write_record(header).map_err(|e| csv_err(path, e))?;
    for row in rows {
        w.write_record(&row).map_err(|e| csv_err(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

impl Report {
    pub fn to_json(&self) -> Result<String> {
        let mut s = serde_json::to_string_pretty(self)?;
        s.push('\n');
        Ok(s)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    /// Write `report.json` and the plot-data CSVs into `dir`; returns the written paths.
    ///
    /// - `costs.csv`: one row per cell and policy, with the cell's exponents.
    /// - `gap.csv`: GAP and log cost ratio per cell (histogram and scatter data).
    /// - `slopes.csv`: mean regret per horizon with the fitted slope.
    pub fn write_to(&self, dir: &Path) -> Result<Vec<PathBuf>> {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let mut written = Vec::new();

        let json = dir.join("report.json");
        std::fs::write(&json, self.to_json()?).map_err(|e| Error::io(&json, e))?;
        written.push(json);

        let costs = dir.join("costs.csv");
        let header = [
            "instance",
            "index",
            "horizon",
            "measured_v",
            "measured_a",
            "raw_v",
            "raw_a",
            "policy",
            "mean_expected_cost",
            "mean_realized_cost",
            "mean_regret",
            "stderr_regret",
        ];
        let rows = self.cells.iter().flat_map(|c| {
            c.results.iter().map(move |r| {
                vec![
                    c.instance.clone(),
                    c.index.map(|i| i.to_string()).unwrap_or_default(),
                    c.horizon.to_string(),
                    c.measured_v.to_string(),
                    opt(c.measured_a),
                    c.raw_v.to_string(),
                    opt(c.raw_a),
                    r.policy.clone(),
                    r.mean_expected_cost.to_string(),
                    r.mean_realized_cost.to_string(),
                    r.mean_regret.to_string(),
                    r.stderr_regret.to_string(),
                ]
            })
        });
        write_rows(&costs, &header, rows)?;
        written.push(costs);

        if self.gap.is_some() {
            let path = dir.join("gap.csv");
            let rows = self.cells.iter().map(|c| {
                vec![
                    c.instance.clone(),
                    c.index.map(|i| i.to_string()).unwrap_or_default(),
                    c.horizon.to_string(),
                    opt(c.log_cost_ratio),
                    opt(c.gap),
                ]
            });
            write_rows(&path, &["instance", "index", "horizon", "log_cost_pure_over_nopred", "gap"], rows)?;
            written.push(path);
        }

        if !self.slopes.is_empty() {
            let path = dir.join("slopes.csv");
            let rows = self.slopes.iter().flat_map(|s| {
                s.horizons.iter().zip(&s.mean_regrets).map(move |(t, r)| {
                    vec![s.instance.clone(), s.policy.clone(), t.to_string(), r.to_string(), opt(s.slope)]
                })
            });
            write_rows(&path, &["instance", "policy", "horizon", "mean_regret", "slope"], rows)?;
            written.push(path);
        }
        Ok(written)
    }
}
