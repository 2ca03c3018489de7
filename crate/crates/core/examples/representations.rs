//! The four graph matrices of a small path graph.

use nalgebra::DMatrix;
use spectral_gnn::{build_representation, Dataset, ReprKind, Result};

pub fn run_example() -> Result<()> {
    // path 0 - 1 - 2 plus an isolated node 3
    let ds = Dataset::new(
        "path",
        1,
        false,
        DMatrix::zeros(4, 1),
        vec![0; 4],
        vec![(0, 1), (1, 2)],
    )?;
    for kind in ReprKind::ALL {
        let m = build_representation(&ds, kind);
        println!("{kind} (symmetric: {}){:.3}", m.symmetric, m.values);
    }

    let directed = Dataset::new(
        "arc",
        1,
        true,
        DMatrix::zeros(2, 1),
        vec![0; 2],
        vec![(0, 1)],
    )?;
    let a = build_representation(&directed, ReprKind::Adjacency);
    println!("directed edge 0 -> 1 lands at A[1, 0]:{}", a.values);
    Ok(())
}

fn main() -> Result<()> {
    run_example()
}
