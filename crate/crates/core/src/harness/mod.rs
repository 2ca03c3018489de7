//! Experiment orchestration: hyperparameter grids selected on mean
//! validation accuracy, kernel / representation / truncation ablations,
//! split-convention audits, and report emission.
//!
//! Every run is one (grid point, seed) pair. Grid points are evaluated in
//! a fixed lexicographic order; the seeds of a point run in parallel over
//! shared, immutable inputs and are collected back in seed order, so the
//! output is independent of thread scheduling.

mod ablation;
mod audit;
mod report;

use std::collections::HashMap;
use std::fmt;
use std::path::PathBuf;
use std::time::Instant;

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::filter::{kernel_matrix, KernelKind, KernelMatrix, KernelSpec};
use crate::model::{ForwardContext, ModelKind};
use crate::representation::{build_representation, GraphMatrix, ReprKind};
use crate::spectral::{self, SpectralSystem};
use crate::splits::{generate_splits, SplitKind, SplitSet};
use crate::training::{train_run, TrainConfig};

pub use ablation::{
    ablate_kernel, ablate_representation, ablate_truncation, truncation_factors, KernelAblationRow,
    ReprAblation, TruncationCurve, TruncationPoint,
};
pub use audit::{audit_splits, AuditReport, AuditRow, PROBE_LR, PROBE_WD};
pub use report::{
    aggregate_records, emit_report, format_cell, read_records, write_records, CellSummary,
    ManifestEntry, ReportFormat, RunManifest, RunRecord, CI_FOOTER,
};

pub const DEFAULT_GAMMAS: [f64; 4] = [0.01, 0.1, 1.0, 10.0];
pub const DEFAULT_LRS: [f64; 3] = [1e-3, 1e-2, 1e-1];
pub const DEFAULT_WDS: [f64; 3] = [0.0, 1e-5, 5e-4];
pub const DEFAULT_HIDDENS: [usize; 3] = [16, 64, 256];

/// The hyperparameter grids and seeds for one (dataset, model) cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentPlan {
    pub dataset: String,
    pub model: ModelKind,
    pub reprs: Vec<ReprKind>,
    pub kernels: Vec<KernelKind>,
    pub gammas: Vec<f64>,
    pub truncs: Vec<f64>,
    pub betas: Vec<f64>,
    pub lrs: Vec<f64>,
    pub wds: Vec<f64>,
    pub hiddens: Vec<usize>,
    pub split: SplitKind,
    pub seeds: Vec<u64>,
    pub epochs: usize,
    pub row_normalize: bool,
}

impl ExperimentPlan {
    /// Default grids, balanced splits, seeds 0..10, 1000 epochs.
    pub fn new(dataset: impl Into<String>, model: ModelKind) -> Self {
        ExperimentPlan {
            dataset: dataset.into(),
            model,
            reprs: vec![ReprKind::Adjacency, ReprKind::Laplacian],
            kernels: KernelKind::ALL.to_vec(),
            gammas: DEFAULT_GAMMAS.to_vec(),
            truncs: vec![0.0],
            betas: vec![0.0],
            lrs: DEFAULT_LRS.to_vec(),
            wds: DEFAULT_WDS.to_vec(),
            hiddens: DEFAULT_HIDDENS.to_vec(),
            split: SplitKind::Balanced,
            seeds: crate::splits::default_seeds(),
            epochs: 1000,
            row_normalize: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let empty = |name: &str| Err(Error::InvalidArgument(format!("empty {name} grid")));
        if self.lrs.is_empty() {
            return empty("lr");
        }
        if self.wds.is_empty() {
            return empty("weight decay");
        }
        if self.model.uses_graph() && self.reprs.is_empty() {
            return empty("representation");
        }
        if self.model.uses_graph() && self.betas.is_empty() {
            return empty("beta");
        }
        if self.model.is_spectral() && self.kernels.is_empty() {
            return empty("kernel");
        }
        if self.model.is_spectral()
            && self.kernels.iter().any(|k| k.needs_gamma())
            && self.gammas.is_empty()
        {
            return empty("gamma");
        }
        if self.model == ModelKind::LrKernel && self.truncs.is_empty() {
            return empty("truncation");
        }
        if self.model == ModelKind::Mlp2 && self.hiddens.is_empty() {
            return empty("hidden width");
        }
        if self.seeds.is_empty() {
            return Err(Error::InvalidArgument("no seeds".into()));
        }
        let mut seeds = self.seeds.clone();
        seeds.sort_unstable();
        seeds.dedup();
        if seeds.len() != self.seeds.len() {
            return Err(Error::InvalidArgument("seeds must be distinct".into()));
        }
        if self.epochs == 0 {
            return Err(Error::InvalidArgument("epochs must be >= 1".into()));
        }
        Ok(())
    }

    /// All grid points, in selection tie-break order. Axes a model does not
    /// read are collapsed.
    pub fn grid(&self) -> Result<Vec<GridPoint>> {
        self.validate()?;
        let model = self.model;
        let reprs: Vec<Option<ReprKind>> = if model.uses_graph() {
            self.reprs.iter().copied().map(Some).collect()
        } else {
            vec![None]
        };
        let truncs: Vec<f64> = if model == ModelKind::LrKernel {
            self.truncs.clone()
        } else {
            vec![0.0]
        };
        let kernels: Vec<Option<KernelSpec>> = if model.is_spectral() {
            let mut out = Vec::new();
            for &k in &self.kernels {
                if k.needs_gamma() {
                    for &g in &self.gammas {
                        out.push(Some(KernelSpec::new(k, Some(g))?));
                    }
                } else {
                    out.push(Some(KernelSpec::new(k, None)?));
                }
            }
            out
        } else {
            vec![None]
        };
        let betas: Vec<f64> = if model.uses_graph() {
            self.betas.clone()
        } else {
            vec![0.0]
        };
        let hiddens: Vec<Option<usize>> = if model == ModelKind::Mlp2 {
            self.hiddens.iter().copied().map(Some).collect()
        } else {
            vec![None]
        };

        let mut grid = Vec::new();
        for &repr in &reprs {
            for &trunc in &truncs {
                for &kernel in &kernels {
                    for &beta in &betas {
                        for &hidden in &hiddens {
                            for &lr in &self.lrs {
                                for &wd in &self.wds {
                                    grid.push(GridPoint {
                                        repr,
                                        kernel,
                                        trunc,
                                        beta,
                                        lr,
                                        wd,
                                        hidden,
                                    });
                                }
                            }
                        }
                    }
                }
            }
        }
        Ok(grid)
    }

    pub fn train_config(&self, point: &GridPoint, seed: u64) -> TrainConfig {
        TrainConfig {
            lr: point.lr,
            weight_decay: point.wd,
            epochs: self.epochs,
            seed,
            hidden: point.hidden.unwrap_or(TrainConfig::default().hidden),
            ..TrainConfig::default()
        }
    }
}

/// One combination of hyperparameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridPoint {
    pub repr: Option<ReprKind>,
    pub kernel: Option<KernelSpec>,
    pub trunc: f64,
    pub beta: f64,
    pub lr: f64,
    pub wd: f64,
    pub hidden: Option<usize>,
}

impl fmt::Display for GridPoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if let Some(r) = self.repr {
            write!(f, "repr={r} ")?;
        }
        if let Some(k) = self.kernel {
            write!(f, "kernel={k} trunc={} ", self.trunc)?;
        }
        if self.repr.is_some() {
            write!(f, "beta={} ", self.beta)?;
        }
        if let Some(h) = self.hidden {
            write!(f, "hidden={h} ")?;
        }
        write!(f, "lr={} wd={}", self.lr, self.wd)
    }
}

/// Mean ± sample standard deviation over seeds for one grid point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregateResult {
    pub point: GridPoint,
    pub test_mean: f64,
    /// `None` for a single run.
    pub test_std: Option<f64>,
    pub val_mean: Option<f64>,
    pub val_std: Option<f64>,
    pub seeds: usize,
}

/// Sample mean and (n−1)-denominator standard deviation.
pub fn mean_std(xs: &[f64]) -> (f64, Option<f64>) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, None);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, Some(var.sqrt()))
}

impl AggregateResult {
    pub fn from_records(point: GridPoint, records: &[RunRecord]) -> Self {
        let tests: Vec<f64> = records.iter().map(|r| r.test_acc).collect();
        let vals: Option<Vec<f64>> = records.iter().map(|r| r.val_acc).collect();
        let (test_mean, test_std) = mean_std(&tests);
        let (val_mean, val_std) = match vals {
            Some(v) if !v.is_empty() => {
                let (m, s) = mean_std(&v);
                (Some(m), s)
            }
            _ => (None, None),
        };
        AggregateResult {
            point,
            test_mean,
            test_std,
            val_mean,
            val_std,
            seeds: records.len(),
        }
    }
}

/// Index of the highest mean validation accuracy; ties go to the earliest
/// point. Only validation statistics are visible here.
pub fn select_by_validation(val_means: &[Option<f64>]) -> Result<usize> {
    match val_means {
        [] => Err(Error::InvalidArgument("empty grid".into())),
        [_] => Ok(0),
        _ => {
            let mut best: Option<(usize, f64)> = None;
            for (i, v) in val_means.iter().enumerate() {
                let v = v.ok_or_else(|| {
                    Error::InvalidArgument(
                        "grid selection needs validation nodes in every split".into(),
                    )
                })?;
                if best.is_none_or(|(_, b)| v > b) {
                    best = Some((i, v));
                }
            }
            Ok(best.expect("nonempty").0)
        }
    }
}

#[derive(Debug, Clone)]
pub struct ValidationOutcome {
    /// The selected grid point's aggregate.
    pub best: AggregateResult,
    /// One aggregate per grid point, in grid order.
    pub points: Vec<AggregateResult>,
    /// Every run, grid order then seed order.
    pub records: Vec<RunRecord>,
}

type TruncKey = (ReprKind, u64);

/// Per-dataset shared state: features, graph matrices, and spectral systems
/// reused across grid points.
pub struct Workspace<'a> {
    dataset: &'a Dataset,
    features: DMatrix<f64>,
    row_normalized: bool,
    cache_dir: Option<PathBuf>,
    matrices: HashMap<ReprKind, (GraphMatrix, DMatrix<f64>)>,
    systems: HashMap<ReprKind, SpectralSystem>,
    truncated: Option<(TruncKey, SpectralSystem, DMatrix<f64>)>,
}

impl<'a> Workspace<'a> {
    pub fn new(dataset: &'a Dataset) -> Self {
        Workspace {
            dataset,
            features: dataset.features.clone(),
            row_normalized: false,
            cache_dir: None,
            matrices: HashMap::new(),
            systems: HashMap::new(),
            truncated: None,
        }
    }

    /// Spectral systems are read from and written to
    /// `<dir>/<dataset>-<repr>.specsys`.
    pub fn with_cache_dir(mut self, dir: impl Into<PathBuf>) -> Self {
        self.cache_dir = Some(dir.into());
        self
    }

    pub fn dataset(&self) -> &Dataset {
        self.dataset
    }

    pub fn features(&self) -> &DMatrix<f64> {
        &self.features
    }

    fn set_row_normalized(&mut self, on: bool) {
        if on != self.row_normalized {
            self.features = if on {
                self.dataset.row_normalized().features
            } else {
                self.dataset.features.clone()
            };
            self.row_normalized = on;
            self.matrices.clear();
            self.truncated = None;
        }
    }

    pub fn cache_path(&self, repr: ReprKind) -> Option<PathBuf> {
        self.cache_dir
            .as_ref()
            .map(|d| d.join(format!("{}-{}.specsys", self.dataset.name, repr)))
    }

    /// Full-rank spectral system of a representation, decomposed once.
    pub fn system(&mut self, repr: ReprKind) -> Result<&SpectralSystem> {
        if !self.systems.contains_key(&repr) {
            let sys = match self.cache_path(repr) {
                Some(path) if path.exists() => spectral::load_cache(&path)?,
                cache => {
                    let m = build_representation(self.dataset, repr);
                    let sys = spectral::decompose(&m)?;
                    if let Some(path) = cache {
                        spectral::save_cache(&sys, &path)?;
                    }
                    sys
                }
            };
            if sys.n() != self.dataset.num_nodes() {
                return Err(Error::Dimension(format!(
                    "cached system is over {} nodes, dataset has {}",
                    sys.n(),
                    self.dataset.num_nodes()
                )));
            }
            self.systems.insert(repr, sys);
        }
        Ok(&self.systems[&repr])
    }

    fn prepare(&mut self, model: ModelKind, point: &GridPoint) -> Result<()> {
        let Some(repr) = point.repr else {
            return Ok(());
        };
        if model == ModelKind::PropLinear && !self.matrices.contains_key(&repr) {
            let m = build_representation(self.dataset, repr);
            let px = &m.values * &self.features;
            self.matrices.insert(repr, (m, px));
        }
        if model.is_spectral() {
            let key = (repr, point.trunc.to_bits());
            if self.truncated.as_ref().is_none_or(|(k, _, _)| *k != key) {
                let sys = self.system(repr)?.truncate(point.trunc)?;
                let vtx = sys.right().tr_mul(&self.features);
                self.truncated = Some((key, sys, vtx));
            }
        }
        Ok(())
    }

    fn kernel_for(&self, point: &GridPoint) -> Option<KernelMatrix> {
        let (_, sys, _) = self.truncated.as_ref()?;
        point.kernel.map(|spec| kernel_matrix(&spec, sys.values()))
    }

    fn context<'s>(
        &'s self,
        model: ModelKind,
        point: &GridPoint,
        kernel: Option<&'s KernelMatrix>,
    ) -> Result<ForwardContext<'s>> {
        let x = &self.features;
        let ctx = match model {
            ModelKind::Linear | ModelKind::Mlp2 => ForwardContext::featureless(x),
            ModelKind::PropLinear => {
                let (m, px) = &self.matrices[&point.repr.expect("graph model")];
                ForwardContext::fixed(x, &m.values).with_projection(px)
            }
            ModelKind::Kernel | ModelKind::LrKernel => {
                let (_, sys, vtx) = self.truncated.as_ref().expect("prepared");
                let kernel = kernel.expect("spectral model has a kernel");
                ForwardContext::spectral(x, sys, kernel).with_projection(vtx)
            }
        };
        Ok(ctx.with_beta(point.beta))
    }

    /// Trains one grid point over every split, in parallel across seeds.
    pub fn run_point(
        &mut self,
        plan: &ExperimentPlan,
        point: &GridPoint,
        splits: &[SplitSet],
    ) -> Result<Vec<RunRecord>> {
        self.set_row_normalized(plan.row_normalize);
        self.prepare(plan.model, point)?;
        let kernel = self.kernel_for(point);
        let ctx = self.context(plan.model, point, kernel.as_ref())?;
        let labels = &self.dataset.labels;
        let classes = self.dataset.num_classes;
        splits
            .par_iter()
            .map(|split| {
                let cfg = plan.train_config(point, split.seed);
                let start = Instant::now();
                let res = train_run(plan.model, &ctx, labels, classes, split, &cfg)?;
                Ok(RunRecord::new(
                    &plan.dataset,
                    plan.model,
                    point,
                    split,
                    &res,
                    start.elapsed().as_millis() as u64,
                ))
            })
            .collect::<Result<Vec<_>>>()
            .map_err(|e| Error::GridPoint {
                point: point.to_string(),
                source: Box::new(e),
            })
    }

    /// Splits of the plan's convention over the plan's seeds.
    pub fn splits_for(&self, plan: &ExperimentPlan) -> Result<Vec<SplitSet>> {
        generate_splits(self.dataset, plan.split, &plan.seeds)
    }
}

/// Trains every grid point over every split, selects the point with the
/// best mean validation accuracy, and reports its test mean ± std.
pub fn run_validation(
    ws: &mut Workspace,
    plan: &ExperimentPlan,
    splits: &[SplitSet],
) -> Result<ValidationOutcome> {
    let grid = plan.grid()?;
    if splits.is_empty() {
        return Err(Error::InvalidArgument("no splits".into()));
    }
    let mut points = Vec::with_capacity(grid.len());
    let mut records = Vec::with_capacity(grid.len() * splits.len());
    for point in &grid {
        let runs = ws.run_point(plan, point, splits)?;
        points.push(AggregateResult::from_records(*point, &runs));
        records.extend(runs);
    }
    let val_means: Vec<Option<f64>> = points.iter().map(|p| p.val_mean).collect();
    let best = points[select_by_validation(&val_means)?].clone();
    Ok(ValidationOutcome {
        best,
        points,
        records,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_collapses_unused_axes() {
        let plan = ExperimentPlan::new("x", ModelKind::Linear);
        assert_eq!(plan.grid().unwrap().len(), 9);
        let plan = ExperimentPlan::new("x", ModelKind::Mlp2);
        assert_eq!(plan.grid().unwrap().len(), 27);
        let plan = ExperimentPlan::new("x", ModelKind::PropLinear);
        assert_eq!(plan.grid().unwrap().len(), 18);
        // 2 reprs × (3 plain kernels + 2 × 4 bandwidths) × 9
        let plan = ExperimentPlan::new("x", ModelKind::Kernel);
        assert_eq!(plan.grid().unwrap().len(), 2 * 11 * 9);
        let mut plan = ExperimentPlan::new("x", ModelKind::LrKernel);
        plan.truncs = vec![0.0, 0.5];
        assert_eq!(plan.grid().unwrap().len(), 2 * 2 * 11 * 9);
    }

    #[test]
    fn plan_validation() {
        let mut plan = ExperimentPlan::new("x", ModelKind::Linear);
        plan.seeds = vec![1, 1];
        assert!(plan.validate().is_err());
        let mut plan = ExperimentPlan::new("x", ModelKind::Kernel);
        plan.kernels.clear();
        assert!(plan.grid().is_err());
        let mut plan = ExperimentPlan::new("x", ModelKind::Linear);
        plan.kernels.clear();
        assert!(plan.grid().is_ok());
    }

    #[test]
    fn selection_prefers_first_of_ties() {
        assert_eq!(
            select_by_validation(&[Some(0.5), Some(0.7), Some(0.7)]).unwrap(),
            1
        );
        assert_eq!(select_by_validation(&[None]).unwrap(), 0);
        assert!(select_by_validation(&[None, Some(0.1)]).is_err());
        assert!(select_by_validation(&[]).is_err());
    }

    #[test]
    fn sample_std_uses_n_minus_one() {
        let (m, s) = mean_std(&[1.0, 2.0, 3.0, 4.0]);
        assert_eq!(m, 2.5);
        assert!((s.unwrap() - (5.0f64 / 3.0).sqrt()).abs() < 1e-15);
        assert_eq!(mean_std(&[0.3]), (0.3, None));
    }
}
