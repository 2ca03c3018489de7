//! The four split conventions on one dataset, plus the split-file format.

use spectral_gnn::splits::{generate_splits, load_splits_for, make_split, save_splits, SplitFile};
use spectral_gnn::{generate_sbm, FeatureMode, Result, SbmConfig, SplitKind};

pub fn run_example() -> Result<()> {
    let ds = generate_sbm(&SbmConfig {
        block_sizes: vec![700, 600, 500],
        intra_p: 0.01,
        inter_q: 0.001,
        feature_mode: FeatureMode::Noise,
        feature_dim: 1,
        seed: 0,
    })?;
    for kind in SplitKind::ALL {
        let s = make_split(&ds, kind, 0)?;
        println!(
            "{kind:>8}: train {:>4}  val {:>4}  test {:>4}",
            s.train.len(),
            s.val.len(),
            s.test.len()
        );
    }

    let splits = generate_splits(&ds, SplitKind::Balanced, &[0, 1, 2])?;
    let path = std::env::temp_dir().join(format!("splits-{}.json", std::process::id()));
    save_splits(
        &path,
        &SplitFile::new(ds.name.clone(), SplitKind::Balanced, &splits),
    )?;
    let back = load_splits_for(&path, &ds)?;
    assert_eq!(back, splits);
    println!("{} balanced splits saved and reloaded", back.len());
    let _ = std::fs::remove_file(&path);
    Ok(())
}

fn main() -> Result<()> {
    run_example()
}
