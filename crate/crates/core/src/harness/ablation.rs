use serde::Serialize;

use super::{run_validation, AggregateResult, ExperimentPlan, RunRecord, Workspace};
use crate::error::{Error, Result};
use crate::filter::KernelKind;
use crate::model::ModelKind;
use crate::representation::ReprKind;
use crate::spectral::retained_rank;
use crate::splits::SplitSet;

/// Truncation factors 0, 0.05, ..., 0.95.
pub fn truncation_factors() -> Vec<f64> {
    (0..20).map(|i| i as f64 / 20.0).collect()
}

#[derive(Debug, Clone, Serialize)]
pub struct KernelAblationRow {
    pub kernel: KernelKind,
    pub result: AggregateResult,
    /// Highest mean validation accuracy among the kernels.
    pub selected: bool,
}

#[derive(Debug, Clone)]
pub struct KernelAblation {
    pub dataset: String,
    pub rows: Vec<KernelAblationRow>,
    pub records: Vec<RunRecord>,
}

/// One validated result per kernel, each tuned over the remaining grids.
pub fn ablate_kernel(
    ws: &mut Workspace,
    plan: &ExperimentPlan,
    splits: &[SplitSet],
) -> Result<KernelAblation> {
    if !plan.model.is_spectral() {
        return Err(Error::InvalidArgument(format!(
            "kernel ablation needs a spectral model, got {}",
            plan.model
        )));
    }
    let mut rows = Vec::new();
    let mut records = Vec::new();
    for kind in KernelKind::ALL {
        let sub = ExperimentPlan {
            kernels: vec![kind],
            ..plan.clone()
        };
        let out = run_validation(ws, &sub, splits)?;
        records.extend(out.records);
        rows.push(KernelAblationRow {
            kernel: kind,
            result: out.best,
            selected: false,
        });
    }
    let vals: Vec<Option<f64>> = rows.iter().map(|r| r.result.val_mean).collect();
    let winner = super::select_by_validation(&vals)?;
    rows[winner].selected = true;
    Ok(KernelAblation {
        dataset: plan.dataset.clone(),
        rows,
        records,
    })
}

impl KernelAblation {
    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record([
            "dataset",
            "kernel",
            "gamma",
            "repr",
            "val_mean",
            "test_mean",
            "test_std",
            "seeds",
            "selected",
        ])?;
        for r in &self.rows {
            let p = &r.result.point;
            w.write_record([
                self.dataset.clone(),
                r.kernel.to_string(),
                p.kernel
                    .and_then(|k| k.gamma())
                    .map(|g| g.to_string())
                    .unwrap_or_default(),
                p.repr.map(|k| k.to_string()).unwrap_or_default(),
                opt(r.result.val_mean),
                r.result.test_mean.to_string(),
                opt(r.result.test_std),
                r.result.seeds.to_string(),
                r.selected.to_string(),
            ])?;
        }
        finish(w)
    }
}

#[derive(Debug, Clone)]
pub struct ReprAblation {
    pub dataset: String,
    pub first: ReprKind,
    pub second: ReprKind,
    pub first_result: AggregateResult,
    pub second_result: AggregateResult,
    /// Test accuracy of `first` minus that of `second`.
    pub difference: f64,
    pub records: Vec<RunRecord>,
}

/// Signed accuracy difference between two representations, each validated
/// separately over the kernel grid.
pub fn ablate_representation(
    ws: &mut Workspace,
    plan: &ExperimentPlan,
    splits: &[SplitSet],
    first: ReprKind,
    second: ReprKind,
) -> Result<ReprAblation> {
    if !plan.model.uses_graph() {
        return Err(Error::InvalidArgument(format!(
            "representation ablation needs a graph model, got {}",
            plan.model
        )));
    }
    let mut records = Vec::new();
    let mut run = |repr| -> Result<AggregateResult> {
        let sub = ExperimentPlan {
            reprs: vec![repr],
            ..plan.clone()
        };
        let out = run_validation(ws, &sub, splits)?;
        records.extend(out.records);
        Ok(out.best)
    };
    let first_result = run(first)?;
    let second_result = run(second)?;
    Ok(ReprAblation {
        dataset: plan.dataset.clone(),
        first,
        second,
        difference: first_result.test_mean - second_result.test_mean,
        first_result,
        second_result,
        records,
    })
}

impl ReprAblation {
    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record([
            "dataset",
            "first",
            "second",
            "first_test",
            "second_test",
            "difference",
        ])?;
        w.write_record([
            self.dataset.clone(),
            self.first.to_string(),
            self.second.to_string(),
            self.first_result.test_mean.to_string(),
            self.second_result.test_mean.to_string(),
            self.difference.to_string(),
        ])?;
        finish(w)
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct TruncationPoint {
    pub factor: f64,
    pub rank: usize,
    pub result: AggregateResult,
    /// Mean test accuracy relative to the first factor of the curve.
    pub ratio: f64,
}

#[derive(Debug, Clone)]
pub struct TruncationCurve {
    pub dataset: String,
    pub points: Vec<TruncationPoint>,
    pub records: Vec<RunRecord>,
}

/// Validated low-rank kernel accuracy at each truncation factor, relative
/// to the first factor (normally 0, i.e. full rank).
pub fn ablate_truncation(
    ws: &mut Workspace,
    plan: &ExperimentPlan,
    splits: &[SplitSet],
    factors: &[f64],
) -> Result<TruncationCurve> {
    if factors.is_empty() {
        return Err(Error::InvalidArgument("no truncation factors".into()));
    }
    let n = ws.dataset().num_nodes();
    let mut points = Vec::with_capacity(factors.len());
    let mut records = Vec::new();
    for &factor in factors {
        let sub = ExperimentPlan {
            model: ModelKind::LrKernel,
            truncs: vec![factor],
            ..plan.clone()
        };
        let out = run_validation(ws, &sub, splits)?;
        records.extend(out.records);
        points.push(TruncationPoint {
            factor,
            rank: retained_rank(n, factor)?,
            result: out.best,
            ratio: f64::NAN,
        });
    }
    let base = points[0].result.test_mean;
    for p in &mut points {
        p.ratio = if p.result.test_mean == base {
            1.0
        } else {
            p.result.test_mean / base
        };
    }
    Ok(TruncationCurve {
        dataset: plan.dataset.clone(),
        points,
        records,
    })
}

impl TruncationCurve {
    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record([
            "dataset",
            "factor",
            "rank",
            "test_mean",
            "test_std",
            "ratio",
        ])?;
        for p in &self.points {
            w.write_record([
                self.dataset.clone(),
                p.factor.to_string(),
                p.rank.to_string(),
                p.result.test_mean.to_string(),
                opt(p.result.test_std),
                p.ratio.to_string(),
            ])?;
        }
        finish(w)
    }
}

fn opt(x: Option<f64>) -> String {
    x.map(|v| v.to_string()).unwrap_or_default()
}

pub(super) fn finish(w: csv::Writer<Vec<u8>>) -> Result<String> {
    let bytes = w
        .into_inner()
        .map_err(|e| Error::InvalidArgument(format!("csv flush: {e}")))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn twenty_factors() {
        let f = truncation_factors();
        assert_eq!(f.len(), 20);
        assert_eq!(f[0], 0.0);
        assert_eq!(f[10], 0.5);
        assert!((f[19] - 0.95).abs() < 1e-15);
    }
}
