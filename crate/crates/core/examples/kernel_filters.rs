//! Kernel matrices over a spectrum and the propagation operators they
//! induce.

use nalgebra::{DMatrix, DVector};
use spectral_gnn::filter::{build_propagation, filter_values, kernel_matrix, regularize};
use spectral_gnn::spectral::decompose_matrix;
use spectral_gnn::{KernelKind, KernelSpec, Result};

pub fn run_example() -> Result<()> {
    // 4-cycle adjacency
    let a = DMatrix::from_row_slice(
        4,
        4,
        &[
            0., 1., 0., 1., 1., 0., 1., 0., 0., 1., 0., 1., 1., 0., 1., 0.,
        ],
    );
    let sys = decompose_matrix(&a, true, None)?;
    println!("spectrum: {:?}", sys.values().as_slice());

    for kind in KernelKind::ALL {
        let spec = KernelSpec::new(kind, kind.needs_gamma().then_some(1.0))?;
        let k = kernel_matrix(&spec, sys.values());
        let h = filter_values(&k, &DVector::from_element(4, 0.25))?;
        println!("{spec}: h = {:.3?}", h.as_slice());
    }

    // identity kernel with alpha = spectrum reproduces A
    let id = kernel_matrix(&KernelSpec::identity(), sys.values());
    let p = build_propagation(&sys, &id, sys.values())?;
    println!("|P - A|_F = {:.2e}", (&p - &a).norm());

    let low = sys.truncate(0.5)?;
    let k = kernel_matrix(&KernelSpec::identity(), low.values());
    let p2 = build_propagation(&low, &k, low.values())?;
    println!("rank-2 approximation:{:.3}", p2);
    println!("with beta = 0.5:{:.3}", regularize(&p2, 0.5)?);
    Ok(())
}

fn main() -> Result<()> {
    run_example()
}
