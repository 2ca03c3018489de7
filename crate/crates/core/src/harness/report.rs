use std::fs;
use std::path::Path;
use std::process::Command;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::{mean_std, select_by_validation, GridPoint};
use crate::error::{Error, Result};
use crate::model::ModelKind;
use crate::splits::{SplitKind, SplitSet};
use crate::training::RunResult;

/// One results-CSV row: a single (grid point, seed) run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub dataset: String,
    pub model: ModelKind,
    pub repr: String,
    pub kernel: String,
    pub gamma: Option<f64>,
    pub trunc: f64,
    pub beta: f64,
    pub lr: f64,
    pub wd: f64,
    pub seed: u64,
    pub val_acc: Option<f64>,
    pub test_acc: f64,
    pub best_epoch: usize,
    pub wall_ms: u64,
    pub split: SplitKind,
    pub hidden: Option<usize>,
}

impl RunRecord {
    pub fn new(
        dataset: &str,
        model: ModelKind,
        point: &GridPoint,
        split: &SplitSet,
        res: &RunResult,
        wall_ms: u64,
    ) -> Self {
        RunRecord {
            dataset: dataset.to_string(),
            model,
            repr: point.repr.map(|r| r.to_string()).unwrap_or_default(),
            kernel: point
                .kernel
                .map(|k| k.kind().to_string())
                .unwrap_or_default(),
            gamma: point.kernel.and_then(|k| k.gamma()),
            trunc: point.trunc,
            beta: point.beta,
            lr: point.lr,
            wd: point.wd,
            seed: split.seed,
            val_acc: res.val_accuracy,
            test_acc: res.test_accuracy,
            best_epoch: res.best_epoch,
            wall_ms,
            split: split.kind,
            hidden: point.hidden,
        }
    }

    /// The row with timing zeroed, for determinism comparisons.
    pub fn without_timing(&self) -> RunRecord {
        RunRecord {
            wall_ms: 0,
            ..self.clone()
        }
    }

    fn config_key(&self) -> ConfigKey {
        ConfigKey {
            dataset: self.dataset.clone(),
            model: self.model,
            split: self.split,
            repr: self.repr.clone(),
            kernel: self.kernel.clone(),
            gamma: self.gamma.map(f64::to_bits),
            trunc: self.trunc.to_bits(),
            beta: self.beta.to_bits(),
            lr: self.lr.to_bits(),
            wd: self.wd.to_bits(),
            hidden: self.hidden,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
struct ConfigKey {
    dataset: String,
    model: ModelKind,
    split: SplitKind,
    repr: String,
    kernel: String,
    gamma: Option<u64>,
    trunc: u64,
    beta: u64,
    lr: u64,
    wd: u64,
    hidden: Option<usize>,
}

pub fn write_records(path: impl AsRef<Path>, records: &[RunRecord]) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, records_to_csv(records)?).map_err(|e| Error::io(path, e))
}

pub fn records_to_csv(records: &[RunRecord]) -> Result<String> {
    let mut w = csv::WriterBuilder::new()
        .has_headers(false)
        .from_writer(Vec::new());
    w.write_record(RECORD_COLUMNS)?;
    for r in records {
        w.serialize(r)?;
    }
    super::ablation::finish(w)
}

const RECORD_COLUMNS: [&str; 16] = [
    "dataset",
    "model",
    "repr",
    "kernel",
    "gamma",
    "trunc",
    "beta",
    "lr",
    "wd",
    "seed",
    "val_acc",
    "test_acc",
    "best_epoch",
    "wall_ms",
    "split",
    "hidden",
];

pub fn read_records(path: impl AsRef<Path>) -> Result<Vec<RunRecord>> {
    let path = path.as_ref();
    if !path.exists() {
        return Err(Error::MissingFile(path.to_path_buf()));
    }
    let mut r = csv::Reader::from_path(path)?;
    let records = r
        .deserialize()
        .collect::<std::result::Result<Vec<RunRecord>, _>>()?;
    Ok(records)
}

/// Seed-aggregated statistics of one configuration.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CellSummary {
    pub dataset: String,
    pub model: ModelKind,
    pub split: SplitKind,
    pub repr: String,
    pub kernel: String,
    pub gamma: Option<f64>,
    pub trunc: f64,
    pub beta: f64,
    pub lr: f64,
    pub wd: f64,
    pub hidden: Option<usize>,
    pub seeds: usize,
    pub val_mean: Option<f64>,
    pub test_mean: f64,
    pub test_std: Option<f64>,
}

/// Groups records by configuration, in order of first appearance.
pub fn aggregate_records(records: &[RunRecord]) -> Vec<CellSummary> {
    let mut groups: Vec<(ConfigKey, Vec<&RunRecord>)> = Vec::new();
    for r in records {
        let key = r.config_key();
        match groups.iter_mut().find(|(k, _)| *k == key) {
            Some((_, g)) => g.push(r),
            None => groups.push((key, vec![r])),
        }
    }
    groups
        .into_iter()
        .map(|(_, g)| {
            let first = g[0];
            let tests: Vec<f64> = g.iter().map(|r| r.test_acc).collect();
            let vals: Option<Vec<f64>> = g.iter().map(|r| r.val_acc).collect();
            let (test_mean, test_std) = mean_std(&tests);
            CellSummary {
                dataset: first.dataset.clone(),
                model: first.model,
                split: first.split,
                repr: first.repr.clone(),
                kernel: first.kernel.clone(),
                gamma: first.gamma,
                trunc: first.trunc,
                beta: first.beta,
                lr: first.lr,
                wd: first.wd,
                hidden: first.hidden,
                seeds: g.len(),
                val_mean: vals.map(|v| mean_std(&v).0),
                test_mean,
                test_std,
            }
        })
        .collect()
}

/// For each (dataset, model, split), the configuration with the best mean
/// validation accuracy.
fn best_cells(cells: &[CellSummary]) -> Result<Vec<&CellSummary>> {
    let mut keys: Vec<(&str, ModelKind, SplitKind)> = Vec::new();
    for c in cells {
        let k = (c.dataset.as_str(), c.model, c.split);
        if !keys.contains(&k) {
            keys.push(k);
        }
    }
    keys.into_iter()
        .map(|k| {
            let group: Vec<&CellSummary> = cells
                .iter()
                .filter(|c| (c.dataset.as_str(), c.model, c.split) == k)
                .collect();
            let vals: Vec<Option<f64>> = group.iter().map(|c| c.val_mean).collect();
            Ok(group[select_by_validation(&vals)?])
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Csv,
    Markdown,
}

impl FromStr for ReportFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(ReportFormat::Csv),
            "md" | "markdown" => Ok(ReportFormat::Markdown),
            _ => Err(Error::InvalidArgument(format!(
                "unknown report format {s:?}"
            ))),
        }
    }
}

/// Table cell "mean(std)" with the mean in percent to one decimal and the
/// std in units of that last digit, e.g. 0.790 ± 0.014 → "79.0(14)".
pub fn format_cell(mean: f64, std: Option<f64>) -> String {
    match std {
        Some(s) => format!("{:.1}({})", mean * 100.0, (s * 1000.0).round() as i64),
        None => format!("{:.1}", mean * 100.0),
    }
}

pub const CI_FOOTER: &str = "Uncertainties are sample standard deviations over seeds \
(n-1 denominator), not 95% confidence intervals; single-split conventions carry none.";

const SUMMARY_COLUMNS: [&str; 15] = [
    "dataset",
    "model",
    "split",
    "repr",
    "kernel",
    "gamma",
    "trunc",
    "beta",
    "lr",
    "wd",
    "hidden",
    "seeds",
    "val_mean",
    "test_mean",
    "test_std",
];

/// Renders the validation-selected configuration of every (dataset, model,
/// split) in the records. Output depends only on the records.
pub fn emit_report(records: &[RunRecord], format: ReportFormat) -> Result<String> {
    let cells = aggregate_records(records);
    let best = best_cells(&cells)?;
    match format {
        ReportFormat::Csv => {
            let mut w = csv::WriterBuilder::new()
                .has_headers(false)
                .from_writer(Vec::new());
            w.write_record(SUMMARY_COLUMNS)?;
            for c in best {
                w.serialize(c)?;
            }
            super::ablation::finish(w)
        }
        ReportFormat::Markdown => {
            let mut out = String::from(
                "| dataset | model | split | configuration | seeds | test accuracy |\n\
                 |---|---|---|---|---|---|\n",
            );
            if best.is_empty() {
                return Ok(out);
            }
            for c in best {
                out.push_str(&format!(
                    "| {} | {} | {} | {} | {} | {} |\n",
                    c.dataset,
                    c.model,
                    c.split,
                    describe(c),
                    c.seeds,
                    format_cell(c.test_mean, c.test_std)
                ));
            }
            out.push('\n');
            out.push_str(CI_FOOTER);
            out.push('\n');
            Ok(out)
        }
    }
}

fn describe(c: &CellSummary) -> String {
    let mut parts = Vec::new();
    if !c.repr.is_empty() {
        parts.push(format!("repr={}", c.repr));
    }
    if !c.kernel.is_empty() {
        match c.gamma {
            Some(g) => parts.push(format!("kernel={}({g})", c.kernel)),
            None => parts.push(format!("kernel={}", c.kernel)),
        }
        parts.push(format!("trunc={}", c.trunc));
    }
    if !c.repr.is_empty() {
        parts.push(format!("beta={}", c.beta));
    }
    if let Some(h) = c.hidden {
        parts.push(format!("hidden={h}"));
    }
    parts.push(format!("lr={}", c.lr));
    parts.push(format!("wd={}", c.wd));
    parts.join(" ")
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub dataset: String,
    pub model: ModelKind,
    pub point: String,
    pub seed: u64,
    pub wall_ms: u64,
}

/// Provenance of one CLI invocation.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: Vec<String>,
    pub git_describe: String,
    pub total_wall_ms: u64,
    pub runs: Vec<ManifestEntry>,
}

impl RunManifest {
    pub fn new(command: Vec<String>, records: &[RunRecord], total_wall_ms: u64) -> Self {
        let runs = records
            .iter()
            .map(|r| ManifestEntry {
                dataset: r.dataset.clone(),
                model: r.model,
                point: point_label(r),
                seed: r.seed,
                wall_ms: r.wall_ms,
            })
            .collect();
        RunManifest {
            command,
            git_describe: git_describe(),
            total_wall_ms,
            runs,
        }
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let json = serde_json::to_string_pretty(self)?;
        fs::write(path, json).map_err(|e| Error::io(path, e))
    }
}

fn point_label(r: &RunRecord) -> String {
    let mut s = format!("split={} lr={} wd={}", r.split, r.lr, r.wd);
    if !r.repr.is_empty() {
        s.push_str(&format!(" repr={} beta={}", r.repr, r.beta));
    }
    if !r.kernel.is_empty() {
        s.push_str(&format!(" kernel={} trunc={}", r.kernel, r.trunc));
        if let Some(g) = r.gamma {
            s.push_str(&format!(" gamma={g}"));
        }
    }
    if let Some(h) = r.hidden {
        s.push_str(&format!(" hidden={h}"));
    }
    s
}

fn git_describe() -> String {
    Command::new("git")
        .args(["describe", "--always", "--dirty"])
        .output()
        .ok()
        .filter(|o| o.status.success())
        .and_then(|o| String::from_utf8(o.stdout).ok())
        .map(|s| s.trim().to_string())
        .filter(|s| !s.is_empty())
        .unwrap_or_else(|| "unknown".to_string())
}
