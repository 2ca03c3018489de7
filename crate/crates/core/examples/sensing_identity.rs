//! The low-rank kernel prediction at a node, rewritten as a Frobenius inner
//! product against the rank-one parameter alpha * weightᵀ.

use nalgebra::{DMatrix, DVector};
use spectral_gnn::filter::kernel_matrix;
use spectral_gnn::model::{forward, sensing_form, ForwardContext, ModelParams};
use spectral_gnn::{
    build_representation, decompose, generate_sbm, FeatureMode, KernelKind, KernelSpec, ModelKind,
    ReprKind, Result, SbmConfig,
};

pub fn run_example() -> Result<()> {
    let ds = generate_sbm(&SbmConfig {
        block_sizes: vec![10, 10],
        intra_p: 0.5,
        inter_q: 0.1,
        feature_mode: FeatureMode::BlockMeans,
        feature_dim: 3,
        seed: 2,
    })?;
    let sys = decompose(&build_representation(&ds, ReprKind::Laplacian))?.truncate(0.5)?;
    let k = kernel_matrix(
        &KernelSpec::new(KernelKind::SobolevUnbounded, Some(0.5))?,
        sys.values(),
    );
    let alpha = DVector::from_fn(sys.rank(), |i, _| 1.0 / (1.0 + i as f64));
    let weight = DMatrix::from_column_slice(3, 1, &[0.3, -1.0, 0.5]);

    let params = ModelParams::Spectral {
        weight: weight.clone(),
        alpha: alpha.clone(),
    };
    let ctx = ForwardContext::spectral(&ds.features, &sys, &k);
    let logits = forward(ModelKind::LrKernel, &params, &ctx)?;
    let mut worst = 0.0f64;
    for j in 0..ds.num_nodes() {
        let h = sensing_form(&sys, &k, &alpha, &weight, &ds.features, j)?;
        worst = worst.max((h - logits[(j, 0)]).abs());
    }
    println!(
        "max |sensing form - forward| over {} nodes: {worst:.2e}",
        ds.num_nodes()
    );
    Ok(())
}

fn main() -> Result<()> {
    run_example()
}
