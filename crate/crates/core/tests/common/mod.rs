//! Independent oracles shared by the integration tests and the acceptance
//! target. Each `check_*` returns a short description on success.

#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use spectral_gnn::filter::{build_propagation, kernel_matrix};
use spectral_gnn::model::{
    backward, forward, init_params, sensing_form, ForwardContext, ModelParams,
};
use spectral_gnn::spectral::decompose_matrix;
use spectral_gnn::splits::{make_balanced, make_dense, make_sparse};
use spectral_gnn::training::{cross_entropy, train};
use spectral_gnn::{
    build_representation, decompose, generate_sbm, Dataset, FeatureMode, KernelKind, KernelSpec,
    ModelKind, ReprKind, SbmConfig, SplitSet, TrainConfig,
};

pub type Check = Result<String, String>;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_matrix(rng: &mut ChaCha8Rng, r: usize, c: usize) -> DMatrix<f64> {
    DMatrix::from_fn(r, c, |_, _| rng.random_range(-1.0..1.0))
}

/// Erdős–Rényi graph with uniform random labels and features.
pub fn random_graph(
    rng: &mut ChaCha8Rng,
    n: usize,
    d: usize,
    classes: usize,
    p: f64,
    directed: bool,
) -> Dataset {
    let mut edges = Vec::new();
    for i in 0..n {
        for j in 0..n {
            if i == j || (!directed && j < i) {
                continue;
            }
            if rng.random_bool(p) {
                edges.push((i, j));
            }
        }
    }
    let labels = (0..n).map(|_| rng.random_range(0..classes)).collect();
    let features = random_matrix(rng, n, d);
    Dataset::new("random", classes, directed, features, labels, edges).unwrap()
}

fn rel_frobenius(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    let scale = b.norm().max(1e-300);
    (a - b).norm() / scale
}

fn max_abs(a: &DMatrix<f64>) -> f64 {
    a.iter().fold(0.0f64, |m, x| m.max(x.abs()))
}

/// Identity kernel with alpha equal to the spectrum rebuilds the source
/// matrix, for every representation of undirected and directed graphs.
pub fn check_identity_reconstruction() -> Check {
    let mut worst = 0.0f64;
    let mut cases = 0;
    for seed in 0..6 {
        let mut r = rng(100 + seed);
        let ds = random_graph(&mut r, 12 + seed as usize, 2, 2, 0.3, seed % 2 == 1);
        for kind in ReprKind::ALL {
            let m = build_representation(&ds, kind);
            if m.values.norm() == 0.0 {
                continue;
            }
            let sys = decompose(&m).map_err(|e| e.to_string())?;
            let k = kernel_matrix(&KernelSpec::identity(), sys.values());
            let p = build_propagation(&sys, &k, sys.values()).map_err(|e| e.to_string())?;
            worst = worst.max(rel_frobenius(&p, &m.values));
            cases += 1;
        }
    }
    if worst <= 1e-8 {
        Ok(format!(
            "{cases} matrices, worst relative error {worst:.1e}"
        ))
    } else {
        Err(format!("relative reconstruction error {worst:.3e} > 1e-8"))
    }
}

fn kernel_for_seed(seed: u64) -> KernelSpec {
    let kind = KernelKind::ALL[seed as usize % KernelKind::ALL.len()];
    KernelSpec::new(kind, kind.needs_gamma().then_some(0.5)).unwrap()
}

/// Relative gradient error with an absolute floor below which entries are
/// compared on an absolute scale.
fn grad_error(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(1e-5)
}

fn loss_at(
    kind: ModelKind,
    params: &ModelParams,
    ctx: &ForwardContext,
    labels: &[usize],
    mask: &[usize],
) -> f64 {
    let logits = forward(kind, params, ctx).unwrap();
    cross_entropy(&logits, labels, mask).unwrap().0
}

/// Worst relative error between analytic and central-difference gradients
/// of the training loss, over every parameter of one instance.
pub fn gradient_error(kind: ModelKind, seed: u64) -> f64 {
    const N: usize = 15;
    const D: usize = 7;
    const C: usize = 3;
    let mut r = rng(seed);
    let ds = random_graph(&mut r, N, D, C, 0.3, seed % 2 == 1);
    let repr = ReprKind::ALL[seed as usize % 4];
    let m = build_representation(&ds, repr);
    let full = decompose(&m).unwrap();
    // r = 3 for the low-rank model, r = n for the full one
    let sys = if kind == ModelKind::LrKernel {
        full.truncate(0.8).unwrap()
    } else {
        full
    };
    let km = kernel_matrix(&kernel_for_seed(seed), sys.values());
    let x = &ds.features;
    let ctx = match kind {
        ModelKind::Linear | ModelKind::Mlp2 => ForwardContext::featureless(x),
        ModelKind::PropLinear => ForwardContext::fixed(x, &m.values),
        _ => ForwardContext::spectral(x, &sys, &km),
    }
    .with_beta(0.3);

    let mut params = init_params(kind, &ctx, C, 5, seed).unwrap();
    // move alpha off the initialization so every kernel gets a generic point
    if let ModelParams::Spectral { alpha, .. } = &mut params {
        for a in alpha.iter_mut() {
            *a += r.random_range(-0.5..0.5);
        }
    }
    let mask: Vec<usize> = (0..N).filter(|i| i % 3 != 0).collect();
    let logits = forward(kind, &params, &ctx).unwrap();
    let (_, g) = cross_entropy(&logits, &ds.labels, &mask).unwrap();
    let grads = backward(kind, &params, &ctx, &g).unwrap();

    let h = 1e-5;
    let mut worst = 0.0f64;
    let analytic: Vec<Vec<f64>> = grads.slices().iter().map(|s| s.to_vec()).collect();
    for (s, slice) in analytic.iter().enumerate() {
        for (k, &a) in slice.iter().enumerate() {
            let mut plus = params.clone();
            plus.slices_mut()[s][k] += h;
            let mut minus = params.clone();
            minus.slices_mut()[s][k] -= h;
            let numeric = (loss_at(kind, &plus, &ctx, &ds.labels, &mask)
                - loss_at(kind, &minus, &ctx, &ds.labels, &mask))
                / (2.0 * h);
            worst = worst.max(grad_error(a, numeric));
        }
    }
    worst
}

pub fn check_gradients() -> Check {
    let mut worst = 0.0f64;
    for kind in ModelKind::ALL {
        for seed in 0..10 {
            let e = gradient_error(kind, seed);
            if e > 1e-4 {
                return Err(format!("{kind} seed {seed}: gradient error {e:.3e} > 1e-4"));
            }
            worst = worst.max(e);
        }
    }
    Ok(format!(
        "5 model kinds x 10 instances, worst relative error {worst:.1e}"
    ))
}

/// The Frobenius-inner-product form of the scalar low-rank prediction
/// against `forward`, with `beta = 0`.
pub fn check_sensing_identity() -> Check {
    let mut worst = 0.0f64;
    for seed in 0..10 {
        let mut r = rng(200 + seed);
        let ds = random_graph(&mut r, 14, 4, 2, 0.3, seed % 2 == 1);
        let m = build_representation(&ds, ReprKind::ALL[seed as usize % 4]);
        let sys = decompose(&m).unwrap().truncate(0.5).unwrap();
        let km = kernel_matrix(&kernel_for_seed(seed), sys.values());
        let alpha = DVector::from_fn(sys.rank(), |_, _| r.random_range(-1.0..1.0));
        let weight = random_matrix(&mut r, 4, 1);
        let params = ModelParams::Spectral {
            weight: weight.clone(),
            alpha: alpha.clone(),
        };
        let ctx = ForwardContext::spectral(&ds.features, &sys, &km);
        let logits = forward(ModelKind::LrKernel, &params, &ctx).unwrap();
        for j in 0..ds.num_nodes() {
            let h = sensing_form(&sys, &km, &alpha, &weight, &ds.features, j).unwrap();
            worst = worst.max((h - logits[(j, 0)]).abs() / logits[(j, 0)].abs().max(1.0));
        }
    }
    if worst <= 1e-10 {
        Ok(format!("10 instances, worst deviation {worst:.1e}"))
    } else {
        Err(format!("sensing form deviates by {worst:.3e} > 1e-10"))
    }
}

/// `lr_kernel` at factor 0, `kernel`, and `prop_linear` on the source
/// matrix coincide when the kernel is the identity and alpha the spectrum.
pub fn check_equivalence_chain() -> Check {
    let mut worst = 0.0f64;
    for seed in 0..6 {
        let mut r = rng(300 + seed);
        let ds = random_graph(&mut r, 16, 5, 3, 0.25, seed % 2 == 1);
        let m = build_representation(&ds, ReprKind::ALL[seed as usize % 4]);
        let full = decompose(&m).unwrap();
        let t0 = full.truncate(0.0).unwrap();
        let k_full = kernel_matrix(&KernelSpec::identity(), full.values());
        let k_t0 = kernel_matrix(&KernelSpec::identity(), t0.values());
        let weight = random_matrix(&mut r, 5, 3);
        let x = &ds.features;
        for beta in [0.0, 0.7] {
            let plin = forward(
                ModelKind::PropLinear,
                &ModelParams::Linear {
                    weight: weight.clone(),
                },
                &ForwardContext::fixed(x, &m.values).with_beta(beta),
            )
            .unwrap();
            let spectral = |kind, sys, k| {
                forward(
                    kind,
                    &ModelParams::Spectral {
                        weight: weight.clone(),
                        alpha: full.values().clone(),
                    },
                    &ForwardContext::spectral(x, sys, k).with_beta(beta),
                )
                .unwrap()
            };
            let kern = spectral(ModelKind::Kernel, &full, &k_full);
            let lr = spectral(ModelKind::LrKernel, &t0, &k_t0);
            let scale = max_abs(&plin).max(1.0);
            worst = worst
                .max(max_abs(&(&kern - &plin)) / scale)
                .max(max_abs(&(&lr - &kern)) / scale);
        }
    }
    if worst <= 1e-8 {
        Ok(format!("6 graphs x 2 betas, worst deviation {worst:.1e}"))
    } else {
        Err(format!("equivalence chain deviates by {worst:.3e} > 1e-8"))
    }
}

/// Structural properties every split must satisfy.
pub fn split_violations(ds: &Dataset, s: &SplitSet) -> Option<String> {
    let n = ds.num_nodes();
    let mut seen = vec![false; n];
    for part in [&s.train, &s.val, &s.test] {
        for &i in part.iter() {
            if i >= n {
                return Some(format!("index {i} out of range"));
            }
            if seen[i] {
                return Some(format!("index {i} appears twice"));
            }
            seen[i] = true;
        }
    }
    if s.train.is_empty() || s.test.is_empty() {
        return Some("empty train or test".into());
    }
    None
}

/// Cardinality and disjointness of every convention on one dataset.
pub fn check_splits_on(ds: &Dataset, seed: u64) -> Result<(), String> {
    let n = ds.num_nodes();
    let members = ds.class_members();
    let dense = make_dense(ds, seed).map_err(|e| e.to_string())?;
    if let Some(v) = split_violations(ds, &dense) {
        return Err(format!("dense: {v}"));
    }
    let (tr, va) = (n * 60 / 100, n * 20 / 100);
    if dense.train.len() != tr || dense.val.len() != va || dense.test.len() != n - tr - va {
        return Err(format!("dense sizes wrong for n = {n}"));
    }
    if members.iter().all(|m| m.len() >= 5) {
        let bal = make_balanced(ds, seed).map_err(|e| e.to_string())?;
        if let Some(v) = split_violations(ds, &bal) {
            return Err(format!("balanced: {v}"));
        }
        for (c, m) in members.iter().enumerate() {
            let train_c = bal.train.iter().filter(|&&i| ds.labels[i] == c).count();
            let val_c = bal.val.iter().filter(|&&i| ds.labels[i] == c).count();
            if train_c != m.len() * 60 / 100 || val_c != m.len() * 20 / 100 {
                return Err(format!("balanced class {c} counts wrong"));
            }
        }
    }
    let c = ds.num_classes;
    if members.iter().all(|m| m.len() >= 20) && n >= 20 * c + 1000 {
        let sp = make_sparse(ds, seed, false).map_err(|e| e.to_string())?;
        if let Some(v) = split_violations(ds, &sp) {
            return Err(format!("sparse: {v}"));
        }
        if sp.train.len() != 20 * c || sp.test.len() != 1000 || !sp.val.is_empty() {
            return Err("sparse sizes wrong".into());
        }
    } else if make_sparse(ds, seed, false).is_ok() {
        return Err("sparse accepted an infeasible dataset".into());
    }
    Ok(())
}

/// Random label-only dataset for split tests.
pub fn random_labels(rng: &mut ChaCha8Rng) -> Dataset {
    let classes = rng.random_range(1..=6);
    let n = rng.random_range(5..=1400);
    let labels: Vec<usize> = (0..n).map(|_| rng.random_range(0..classes)).collect();
    Dataset::new(
        "labels",
        classes,
        false,
        DMatrix::zeros(n, 1),
        labels,
        vec![],
    )
    .unwrap()
}

pub fn check_split_properties() -> Check {
    let mut r = rng(400);
    for case in 0..200 {
        let ds = random_labels(&mut r);
        let seed = r.random_range(0..1000);
        check_splits_on(&ds, seed).map_err(|e| format!("case {case}: {e}"))?;
    }
    Ok("200 random datasets".into())
}

/// Two disjoint 50-cliques with pure-noise features: propagation averages
/// the noise within each block and the classes become separable.
pub fn check_sbm_separable() -> Check {
    let ds = generate_sbm(&SbmConfig {
        block_sizes: vec![50, 50],
        intra_p: 1.0,
        inter_q: 0.0,
        feature_mode: FeatureMode::Noise,
        feature_dim: 4,
        seed: 0,
    })
    .map_err(|e| e.to_string())?;
    let split = make_balanced(&ds, 0).map_err(|e| e.to_string())?;
    let a = build_representation(&ds, ReprKind::Adjacency);
    let cfg = TrainConfig {
        epochs: 200,
        lr: 0.1,
        ..TrainConfig::default()
    };
    let ctx = ForwardContext::fixed(&ds.features, &a.values);
    let t = train(ModelKind::PropLinear, &ctx, &ds.labels, 2, &split, &cfg)
        .map_err(|e| e.to_string())?;
    if t.result.test_accuracy == 1.0 {
        Ok(format!(
            "test accuracy 1.0 at epoch {}",
            t.result.best_epoch
        ))
    } else {
        Err(format!("test accuracy {}", t.result.test_accuracy))
    }
}

/// Symmetric 0/1 matrix from a random undirected graph, for spectral tests.
pub fn random_symmetric(rng: &mut ChaCha8Rng, n: usize) -> DMatrix<f64> {
    let ds = random_graph(rng, n, 1, 1, 0.4, false);
    build_representation(&ds, ReprKind::Adjacency).values
}

pub fn decompose_dense(m: &DMatrix<f64>, symmetric: bool) -> spectral_gnn::SpectralSystem {
    decompose_matrix(m, symmetric, None).unwrap()
}
