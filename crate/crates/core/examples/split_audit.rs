//! Fixed-hyperparameter XW and AXW probes under every split convention.

use spectral_gnn::harness::{audit_splits, format_cell};
use spectral_gnn::{generate_sbm, FeatureMode, Result, SbmConfig, SplitKind};

pub fn run_example() -> Result<()> {
    let ds = generate_sbm(&SbmConfig {
        block_sizes: vec![700, 700],
        intra_p: 0.006,
        inter_q: 0.002,
        feature_mode: FeatureMode::BlockMeans,
        feature_dim: 2,
        seed: 4,
    })?;
    let report = audit_splits(&[&ds], &SplitKind::ALL, &[0, 1, 2], 50)?;
    for r in &report.rows {
        println!(
            "{:>6} {:>8}: {}",
            r.probe.as_str(),
            r.split.as_str(),
            format_cell(r.mean, r.std)
        );
    }
    for s in &report.skipped {
        println!("skipped {}: {}", s.split, s.reason);
    }
    Ok(())
}

fn main() -> Result<()> {
    run_example()
}
