//! Generate a stochastic-block-model dataset, write it in the on-disk
//! format, and load it back.

use spectral_gnn::{generate_sbm, load_dataset, write_dataset, FeatureMode, Result, SbmConfig};

pub fn run_example() -> Result<()> {
    let cfg = SbmConfig {
        block_sizes: vec![40, 40, 40],
        intra_p: 0.2,
        inter_q: 0.02,
        feature_mode: FeatureMode::BlockMeans,
        feature_dim: 8,
        seed: 7,
    };
    let ds = generate_sbm(&cfg)?;
    let s = ds.summary();
    println!(
        "generated: {} nodes, {} edges, {} features, {} classes",
        s.nodes, s.edges, s.features, s.classes
    );

    let dir = std::env::temp_dir().join(format!("sbm-example-{}", std::process::id()));
    write_dataset(&ds, &dir)?;
    let back = load_dataset(&dir)?;
    assert_eq!(back, ds);
    println!("round trip through {} ok", dir.display());
    for (c, members) in back.class_members().iter().enumerate() {
        println!("class {c}: {} nodes", members.len());
    }
    let _ = std::fs::remove_dir_all(&dir);
    Ok(())
}

fn main() -> Result<()> {
    run_example()
}
