//! Hyperparameter grid selected on mean validation accuracy, written to a
//! results CSV and summarized as a table.

use spectral_gnn::harness::{
    emit_report, read_records, run_validation, write_records, ExperimentPlan, ReportFormat,
    Workspace,
};
use spectral_gnn::{generate_sbm, FeatureMode, KernelKind, ModelKind, ReprKind, Result, SbmConfig};

pub fn run_example() -> Result<()> {
    let ds = generate_sbm(&SbmConfig {
        block_sizes: vec![40, 40],
        intra_p: 0.2,
        inter_q: 0.03,
        feature_mode: FeatureMode::BlockMeans,
        feature_dim: 4,
        seed: 5,
    })?;
    let plan = ExperimentPlan {
        reprs: vec![ReprKind::Adjacency, ReprKind::NormAdjacency],
        kernels: vec![KernelKind::Identity, KernelKind::GaussianRbf],
        gammas: vec![0.1, 1.0],
        lrs: vec![1e-2],
        wds: vec![0.0, 5e-4],
        seeds: vec![0, 1, 2],
        epochs: 100,
        ..ExperimentPlan::new(ds.name.clone(), ModelKind::Kernel)
    };
    let mut ws = Workspace::new(&ds);
    let splits = ws.splits_for(&plan)?;
    let out = run_validation(&mut ws, &plan, &splits)?;
    println!(
        "{} grid points, {} runs; selected [{}]",
        out.points.len(),
        out.records.len(),
        out.best.point
    );

    let path = std::env::temp_dir().join(format!("results-{}.csv", std::process::id()));
    write_records(&path, &out.records)?;
    print!(
        "{}",
        emit_report(&read_records(&path)?, ReportFormat::Markdown)?
    );
    let _ = std::fs::remove_file(&path);
    Ok(())
}

fn main() -> Result<()> {
    run_example()
}
