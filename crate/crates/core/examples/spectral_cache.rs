//! Decompose a graph matrix, truncate its spectrum, and round-trip the
//! spectral system through a cache file.

use spectral_gnn::spectral::{self, retained_rank};
use spectral_gnn::{build_representation, generate_sbm, FeatureMode, ReprKind, Result, SbmConfig};

pub fn run_example() -> Result<()> {
    let ds = generate_sbm(&SbmConfig {
        block_sizes: vec![25, 25],
        intra_p: 0.3,
        inter_q: 0.05,
        feature_mode: FeatureMode::Noise,
        feature_dim: 2,
        seed: 1,
    })?;
    let adj = build_representation(&ds, ReprKind::Adjacency);
    let sys = spectral::decompose(&adj)?;
    let top: Vec<String> = sys
        .values()
        .iter()
        .take(4)
        .map(|v| format!("{v:.3}"))
        .collect();
    println!("leading eigenvalues by magnitude: {}", top.join(", "));

    let err = (sys.reconstruct() - &adj.values).norm() / adj.values.norm();
    println!("relative reconstruction error: {err:.2e}");

    for factor in [0.0, 0.5, 0.9] {
        let t = sys.truncate(factor)?;
        let err = (t.reconstruct() - &adj.values).norm() / adj.values.norm();
        println!(
            "factor {factor:.2}: rank {} (= {}), error {err:.3}",
            t.rank(),
            retained_rank(sys.n(), factor)?
        );
    }

    let path = std::env::temp_dir().join(format!("sbm-{}.specsys", std::process::id()));
    spectral::save_cache(&sys, &path)?;
    let loaded = spectral::load_cache(&path)?;
    assert_eq!(loaded.values(), sys.values());
    let half = spectral::load_cache_truncated(&path, 0.5)?;
    println!(
        "cache {} bytes; truncated load rank {}",
        std::fs::metadata(&path).map(|m| m.len()).unwrap_or(0),
        half.rank()
    );
    let _ = std::fs::remove_file(&path);
    Ok(())
}

fn main() -> Result<()> {
    run_example()
}
