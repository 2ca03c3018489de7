//! Kernel, representation, and truncation ablations on a synthetic graph.

use spectral_gnn::harness::{
    ablate_kernel, ablate_representation, ablate_truncation, format_cell, ExperimentPlan, Workspace,
};
use spectral_gnn::{generate_sbm, FeatureMode, KernelKind, ModelKind, ReprKind, Result, SbmConfig};

pub fn run_example() -> Result<()> {
    let ds = generate_sbm(&SbmConfig {
        block_sizes: vec![30, 30],
        intra_p: 0.25,
        inter_q: 0.03,
        feature_mode: FeatureMode::Noise,
        feature_dim: 3,
        seed: 11,
    })?;
    let plan = ExperimentPlan {
        reprs: vec![ReprKind::Adjacency],
        gammas: vec![1.0],
        lrs: vec![5e-2],
        wds: vec![0.0],
        seeds: vec![0, 1, 2],
        epochs: 60,
        ..ExperimentPlan::new(ds.name.clone(), ModelKind::Kernel)
    };
    let mut ws = Workspace::new(&ds);
    let splits = ws.splits_for(&plan)?;

    let k = ablate_kernel(&mut ws, &plan, &splits)?;
    for row in &k.rows {
        let mark = if row.selected { " (selected)" } else { "" };
        println!(
            "kernel {:>4}: {}{mark}",
            row.kernel.as_str(),
            format_cell(row.result.test_mean, row.result.test_std)
        );
    }

    let id_plan = ExperimentPlan {
        kernels: vec![KernelKind::Identity],
        ..plan.clone()
    };
    let r = ablate_representation(
        &mut ws,
        &id_plan,
        &splits,
        ReprKind::Adjacency,
        ReprKind::Laplacian,
    )?;
    println!("adj - lap: {:+.3}", r.difference);

    let t = ablate_truncation(&mut ws, &id_plan, &splits, &[0.0, 0.5, 0.9])?;
    for p in &t.points {
        println!(
            "truncation {:.2} (rank {}): ratio {:.3}",
            p.factor, p.rank, p.ratio
        );
    }
    Ok(())
}

fn main() -> Result<()> {
    run_example()
}
