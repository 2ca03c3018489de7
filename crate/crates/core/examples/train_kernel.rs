//! Train each model kind once on a synthetic two-community graph.

use spectral_gnn::filter::kernel_matrix;
use spectral_gnn::model::ForwardContext;
use spectral_gnn::splits::make_balanced;
use spectral_gnn::training::train;
use spectral_gnn::{
    build_representation, decompose, generate_sbm, FeatureMode, KernelKind, KernelSpec, ModelKind,
    ReprKind, Result, SbmConfig, TrainConfig,
};

pub fn run_example() -> Result<()> {
    let ds = generate_sbm(&SbmConfig {
        block_sizes: vec![60, 60],
        intra_p: 0.15,
        inter_q: 0.01,
        feature_mode: FeatureMode::Noise,
        feature_dim: 4,
        seed: 3,
    })?;
    let split = make_balanced(&ds, 0)?;
    let adj = build_representation(&ds, ReprKind::Adjacency);
    let full = decompose(&adj)?;
    let low = full.truncate(0.9)?;
    let spec = KernelSpec::new(KernelKind::GaussianRbf, Some(0.1))?;
    let k_full = kernel_matrix(&spec, full.values());
    let k_low = kernel_matrix(&spec, low.values());
    let x = &ds.features;

    let cfg = TrainConfig {
        epochs: 200,
        lr: 0.05,
        hidden: 16,
        ..TrainConfig::default()
    };
    // the features are pure noise, so only graph-aware models can separate the blocks
    let runs = [
        (ModelKind::Linear, ForwardContext::featureless(x)),
        (ModelKind::Mlp2, ForwardContext::featureless(x)),
        (ModelKind::PropLinear, ForwardContext::fixed(x, &adj.values)),
        (
            ModelKind::Kernel,
            ForwardContext::spectral(x, &full, &k_full),
        ),
        (
            ModelKind::LrKernel,
            ForwardContext::spectral(x, &low, &k_low),
        ),
    ];
    for (kind, ctx) in runs {
        let t = train(kind, &ctx, &ds.labels, ds.num_classes, &split, &cfg)?;
        println!(
            "{kind:>8}: test {:.3} (val {:.3}, epoch {})",
            t.result.test_accuracy,
            t.result.val_accuracy.unwrap_or(f64::NAN),
            t.result.best_epoch
        );
    }
    Ok(())
}

fn main() -> Result<()> {
    run_example()
}
