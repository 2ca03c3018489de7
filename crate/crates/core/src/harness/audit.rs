use serde::Serialize;

use super::{mean_std, ExperimentPlan, GridPoint, RunRecord, Workspace};
use crate::dataset::Dataset;
use crate::error::Result;
use crate::model::ModelKind;
use crate::representation::ReprKind;
use crate::splits::{generate_splits, SplitKind};

/// Fixed probe hyperparameters; no validation search is done in an audit.
pub const PROBE_LR: f64 = 1e-3;
pub const PROBE_WD: f64 = 0.0;

#[derive(Debug, Clone, Serialize)]
pub struct AuditRow {
    pub dataset: String,
    pub probe: ModelKind,
    pub split: SplitKind,
    pub mean: f64,
    /// `None` for single-split conventions.
    pub std: Option<f64>,
    pub runs: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct AuditSkip {
    pub dataset: String,
    pub split: SplitKind,
    pub reason: String,
}

#[derive(Debug, Clone, Default)]
pub struct AuditReport {
    pub rows: Vec<AuditRow>,
    /// Conventions whose preconditions a dataset does not meet.
    pub skipped: Vec<AuditSkip>,
    pub records: Vec<RunRecord>,
}

impl AuditReport {
    pub fn get(&self, dataset: &str, probe: ModelKind, split: SplitKind) -> Option<&AuditRow> {
        self.rows
            .iter()
            .find(|r| r.dataset == dataset && r.probe == probe && r.split == split)
    }

    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["dataset", "probe", "split", "mean", "std", "runs"])?;
        for r in &self.rows {
            w.write_record([
                r.dataset.clone(),
                r.probe.to_string(),
                r.split.to_string(),
                r.mean.to_string(),
                r.std.map(|s| s.to_string()).unwrap_or_default(),
                r.runs.to_string(),
            ])?;
        }
        super::ablation::finish(w)
    }
}

/// Runs the `XW` and `AXW` probes under every requested split convention.
pub fn audit_splits(
    datasets: &[&Dataset],
    kinds: &[SplitKind],
    seeds: &[u64],
    epochs: usize,
) -> Result<AuditReport> {
    let mut report = AuditReport::default();
    for ds in datasets {
        let mut ws = Workspace::new(ds);
        for &kind in kinds {
            let splits = match generate_splits(ds, kind, seeds) {
                Ok(s) => s,
                Err(e) => {
                    report.skipped.push(AuditSkip {
                        dataset: ds.name.clone(),
                        split: kind,
                        reason: e.to_string(),
                    });
                    continue;
                }
            };
            for probe in [ModelKind::Linear, ModelKind::PropLinear] {
                let plan = ExperimentPlan {
                    lrs: vec![PROBE_LR],
                    wds: vec![PROBE_WD],
                    betas: vec![0.0],
                    reprs: vec![ReprKind::Adjacency],
                    split: kind,
                    seeds: seeds.to_vec(),
                    epochs,
                    ..ExperimentPlan::new(ds.name.clone(), probe)
                };
                let point = GridPoint {
                    repr: probe.uses_graph().then_some(ReprKind::Adjacency),
                    kernel: None,
                    trunc: 0.0,
                    beta: 0.0,
                    lr: PROBE_LR,
                    wd: PROBE_WD,
                    hidden: None,
                };
                let runs = ws.run_point(&plan, &point, &splits)?;
                let tests: Vec<f64> = runs.iter().map(|r| r.test_acc).collect();
                let (mean, std) = mean_std(&tests);
                report.rows.push(AuditRow {
                    dataset: ds.name.clone(),
                    probe,
                    split: kind,
                    mean,
                    std: if kind.is_single() { None } else { std },
                    runs: runs.len(),
                });
                report.records.extend(runs);
            }
        }
    }
    Ok(report)
}
