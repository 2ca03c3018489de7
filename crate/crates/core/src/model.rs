//! One-layer linear predictors over a propagation operator, plus a
//! two-layer ReLU perceptron baseline.
//!
//! | kind        | logits                                |
//! |-------------|---------------------------------------|
//! | `Linear`    | `X W`                                 |
//! | `PropLinear`| `(P + βI) X W` for a fixed graph matrix |
//! | `Kernel`    | `(U diag(Kα) Vᵀ + βI) X W`, full rank  |
//! | `LrKernel`  | same, on a truncated spectral system  |
//! | `Mlp2`      | `ReLU(X W₁ + b₁) W₂ + b₂`             |
//!
//! The spectral kinds are evaluated in factored order,
//! `U (diag(Kα) (Vᵀ (X W)))`, so no n × n operator is ever formed.

use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::filter::{filter_values, KernelKind, KernelMatrix};
use crate::spectral::SpectralSystem;

pub const ALPHA_INIT_RIDGE: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    Linear,
    #[serde(rename = "plin")]
    PropLinear,
    Kernel,
    #[serde(rename = "lrkernel")]
    LrKernel,
    Mlp2,
}

impl ModelKind {
    pub const ALL: [ModelKind; 5] = [
        ModelKind::Mlp2,
        ModelKind::Linear,
        ModelKind::PropLinear,
        ModelKind::Kernel,
        ModelKind::LrKernel,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ModelKind::Linear => "linear",
            ModelKind::PropLinear => "plin",
            ModelKind::Kernel => "kernel",
            ModelKind::LrKernel => "lrkernel",
            ModelKind::Mlp2 => "mlp2",
        }
    }

    pub fn is_spectral(self) -> bool {
        matches!(self, ModelKind::Kernel | ModelKind::LrKernel)
    }

    /// Whether the model reads the graph at all.
    pub fn uses_graph(self) -> bool {
        !matches!(self, ModelKind::Linear | ModelKind::Mlp2)
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.pad(self.as_str())
    }
}

impl FromStr for ModelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "linear" => Ok(ModelKind::Linear),
            "plin" | "prop_linear" => Ok(ModelKind::PropLinear),
            "kernel" => Ok(ModelKind::Kernel),
            "lrkernel" | "lr_kernel" => Ok(ModelKind::LrKernel),
            "mlp2" => Ok(ModelKind::Mlp2),
            _ => Err(Error::InvalidArgument(format!("unknown model {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ModelParams {
    Linear {
        weight: DMatrix<f64>,
    },
    Spectral {
        weight: DMatrix<f64>,
        alpha: DVector<f64>,
    },
    Mlp {
        w1: DMatrix<f64>,
        b1: DVector<f64>,
        w2: DMatrix<f64>,
        b2: DVector<f64>,
    },
}

impl ModelParams {
    pub fn slices(&self) -> Vec<&[f64]> {
        match self {
            ModelParams::Linear { weight } => vec![weight.as_slice()],
            ModelParams::Spectral { weight, alpha } => vec![weight.as_slice(), alpha.as_slice()],
            ModelParams::Mlp { w1, b1, w2, b2 } => {
                vec![w1.as_slice(), b1.as_slice(), w2.as_slice(), b2.as_slice()]
            }
        }
    }

    pub fn slices_mut(&mut self) -> Vec<&mut [f64]> {
        match self {
            ModelParams::Linear { weight } => vec![weight.as_mut_slice()],
            ModelParams::Spectral { weight, alpha } => {
                vec![weight.as_mut_slice(), alpha.as_mut_slice()]
            }
            ModelParams::Mlp { w1, b1, w2, b2 } => vec![
                w1.as_mut_slice(),
                b1.as_mut_slice(),
                w2.as_mut_slice(),
                b2.as_mut_slice(),
            ],
        }
    }

    pub fn num_scalars(&self) -> usize {
        self.slices().iter().map(|s| s.len()).sum()
    }

    pub fn is_finite(&self) -> bool {
        self.slices()
            .iter()
            .all(|s| s.iter().all(|x| x.is_finite()))
    }

    /// Zero-valued parameters of the same shape.
    pub fn zeros_like(&self) -> ModelParams {
        let mut z = self.clone();
        for s in z.slices_mut() {
            s.fill(0.0);
        }
        z
    }
}

#[derive(Debug, Clone, Copy)]
pub enum Propagation<'a> {
    None,
    Fixed(&'a DMatrix<f64>),
    Spectral {
        system: &'a SpectralSystem,
        kernel: &'a KernelMatrix,
    },
}

/// Everything a forward pass reads besides the trainable parameters.
#[derive(Debug, Clone, Copy)]
pub struct ForwardContext<'a> {
    pub features: &'a DMatrix<f64>,
    pub propagation: Propagation<'a>,
    /// Weight of the identity term in `P + βI`; ignored by `Linear` and `Mlp2`.
    pub beta: f64,
    /// Optional precomputed `P X` (fixed propagation) or `Vᵀ X` (spectral),
    /// reused across epochs.
    pub projected: Option<&'a DMatrix<f64>>,
}

impl<'a> ForwardContext<'a> {
    pub fn featureless(features: &'a DMatrix<f64>) -> Self {
        ForwardContext {
            features,
            propagation: Propagation::None,
            beta: 0.0,
            projected: None,
        }
    }

    pub fn fixed(features: &'a DMatrix<f64>, p: &'a DMatrix<f64>) -> Self {
        ForwardContext {
            features,
            propagation: Propagation::Fixed(p),
            beta: 0.0,
            projected: None,
        }
    }

    pub fn spectral(
        features: &'a DMatrix<f64>,
        system: &'a SpectralSystem,
        kernel: &'a KernelMatrix,
    ) -> Self {
        ForwardContext {
            features,
            propagation: Propagation::Spectral { system, kernel },
            beta: 0.0,
            projected: None,
        }
    }

    pub fn with_beta(self, beta: f64) -> Self {
        ForwardContext { beta, ..self }
    }

    pub fn with_projection(self, projected: &'a DMatrix<f64>) -> Self {
        ForwardContext {
            projected: Some(projected),
            ..self
        }
    }

    /// Computes the feature projection for [`with_projection`]: `P X` for a
    /// fixed operator, `Vᵀ X` for a spectral one.
    ///
    /// [`with_projection`]: ForwardContext::with_projection
    pub fn compute_projection(&self) -> Option<DMatrix<f64>> {
        match self.propagation {
            Propagation::None => None,
            Propagation::Fixed(p) => Some(p * self.features),
            Propagation::Spectral { system, .. } => Some(system.right().tr_mul(self.features)),
        }
    }

    pub fn num_nodes(&self) -> usize {
        self.features.nrows()
    }

    fn check(&self, kind: ModelKind) -> Result<()> {
        let n = self.num_nodes();
        if let Some(proj) = self.projected {
            let rows = match self.propagation {
                Propagation::Spectral { system, .. } => system.rank(),
                _ => n,
            };
            if proj.shape() != (rows, self.features.ncols()) {
                return Err(Error::Dimension(format!(
                    "projected features are {:?}, expected ({rows}, {})",
                    proj.shape(),
                    self.features.ncols()
                )));
            }
        }
        match (kind, self.propagation) {
            (ModelKind::Linear | ModelKind::Mlp2, _) => Ok(()),
            (ModelKind::PropLinear, Propagation::Fixed(p)) => {
                if p.shape() != (n, n) {
                    return Err(Error::Dimension(format!(
                        "propagation is {:?}, features have {n} rows",
                        p.shape()
                    )));
                }
                Ok(())
            }
            (ModelKind::Kernel | ModelKind::LrKernel, Propagation::Spectral { system, kernel }) => {
                if system.n() != n {
                    return Err(Error::Dimension(format!(
                        "spectral system over {} nodes, features have {n} rows",
                        system.n()
                    )));
                }
                if system.rank() != kernel.rank() {
                    return Err(Error::Dimension(format!(
                        "system rank {} vs kernel rank {}",
                        system.rank(),
                        kernel.rank()
                    )));
                }
                if kind == ModelKind::Kernel && system.rank() != n {
                    return Err(Error::InvalidArgument(format!(
                        "the full-rank kernel model got a rank-{} system over {n} nodes",
                        system.rank()
                    )));
                }
                Ok(())
            }
            (kind, _) => Err(Error::InvalidArgument(format!(
                "model {kind} is missing its propagation input"
            ))),
        }
    }
}

/// Records the shape of every matrix intermediate a forward pass allocates.
pub trait ShapeTrace {
    fn record(&mut self, label: &'static str, rows: usize, cols: usize);
}

impl ShapeTrace for () {
    fn record(&mut self, _: &'static str, _: usize, _: usize) {}
}

impl ShapeTrace for Vec<(&'static str, usize, usize)> {
    fn record(&mut self, label: &'static str, rows: usize, cols: usize) {
        self.push((label, rows, cols));
    }
}

fn params_mismatch(kind: ModelKind) -> Error {
    Error::InvalidArgument(format!("parameters do not match model {kind}"))
}

fn check_weight(weight: &DMatrix<f64>, d: usize) -> Result<()> {
    if weight.nrows() != d {
        return Err(Error::Dimension(format!(
            "weight has {} rows, features have {d} columns",
            weight.nrows()
        )));
    }
    Ok(())
}

fn scale_rows(m: &mut DMatrix<f64>, h: &DVector<f64>) {
    for (i, mut row) in m.row_iter_mut().enumerate() {
        row *= h[i];
    }
}

fn add_bias(m: &mut DMatrix<f64>, b: &DVector<f64>) {
    for mut row in m.row_iter_mut() {
        row += b.transpose();
    }
}

pub fn forward(
    kind: ModelKind,
    params: &ModelParams,
    ctx: &ForwardContext,
) -> Result<DMatrix<f64>> {
    forward_traced(kind, params, ctx, &mut ())
}

pub fn forward_traced(
    kind: ModelKind,
    params: &ModelParams,
    ctx: &ForwardContext,
    trace: &mut impl ShapeTrace,
) -> Result<DMatrix<f64>> {
    ctx.check(kind)?;
    let x = ctx.features;
    let d = x.ncols();
    match (kind, params) {
        (ModelKind::Linear, ModelParams::Linear { weight }) => {
            check_weight(weight, d)?;
            let xw = x * weight;
            trace.record("XW", xw.nrows(), xw.ncols());
            Ok(xw)
        }
        (ModelKind::PropLinear, ModelParams::Linear { weight }) => {
            check_weight(weight, d)?;
            let Propagation::Fixed(p) = ctx.propagation else {
                unreachable!("checked above")
            };
            let mut out = match ctx.projected {
                Some(px) => px * weight,
                None => {
                    let xw = x * weight;
                    trace.record("XW", xw.nrows(), xw.ncols());
                    p * xw
                }
            };
            trace.record("PXW", out.nrows(), out.ncols());
            if ctx.beta != 0.0 {
                out += ctx.beta * (x * weight);
            }
            Ok(out)
        }
        (ModelKind::Kernel | ModelKind::LrKernel, ModelParams::Spectral { weight, alpha }) => {
            check_weight(weight, d)?;
            let Propagation::Spectral { system, kernel } = ctx.propagation else {
                unreachable!("checked above")
            };
            let h = filter_values(kernel, alpha)?;
            let mut t = spectral_coordinates(ctx, system, weight, trace);
            scale_rows(&mut t, &h);
            let mut out = system.left() * t;
            trace.record("U(h*VtXW)", out.nrows(), out.ncols());
            if ctx.beta != 0.0 {
                out += ctx.beta * (x * weight);
            }
            Ok(out)
        }
        (ModelKind::Mlp2, ModelParams::Mlp { w1, b1, w2, b2 }) => {
            check_weight(w1, d)?;
            let mut hidden = x * w1;
            trace.record("XW1", hidden.nrows(), hidden.ncols());
            add_bias(&mut hidden, b1);
            hidden.apply(|v| *v = v.max(0.0));
            let mut out = hidden * w2;
            trace.record("HW2", out.nrows(), out.ncols());
            add_bias(&mut out, b2);
            Ok(out)
        }
        (kind, _) => Err(params_mismatch(kind)),
    }
}

/// Gradients of a scalar loss with respect to the parameters, given the
/// upstream gradient `g = ∂loss/∂logits`.
pub fn backward(
    kind: ModelKind,
    params: &ModelParams,
    ctx: &ForwardContext,
    g: &DMatrix<f64>,
) -> Result<ModelParams> {
    ctx.check(kind)?;
    let x = ctx.features;
    if g.nrows() != x.nrows() {
        return Err(Error::Dimension(format!(
            "upstream gradient has {} rows, features have {}",
            g.nrows(),
            x.nrows()
        )));
    }
    match (kind, params) {
        (ModelKind::Linear, ModelParams::Linear { weight }) => {
            check_logit_cols(g, weight.ncols())?;
            Ok(ModelParams::Linear {
                weight: x.tr_mul(g),
            })
        }
        (ModelKind::PropLinear, ModelParams::Linear { weight }) => {
            check_logit_cols(g, weight.ncols())?;
            let Propagation::Fixed(p) = ctx.propagation else {
                unreachable!("checked above")
            };
            let mut dw = match ctx.projected {
                Some(px) => px.tr_mul(g),
                None => x.tr_mul(&p.tr_mul(g)),
            };
            if ctx.beta != 0.0 {
                dw += ctx.beta * x.tr_mul(g);
            }
            Ok(ModelParams::Linear { weight: dw })
        }
        (ModelKind::Kernel | ModelKind::LrKernel, ModelParams::Spectral { weight, alpha }) => {
            check_logit_cols(g, weight.ncols())?;
            let Propagation::Spectral { system, kernel } = ctx.propagation else {
                unreachable!("checked above")
            };
            let h = filter_values(kernel, alpha)?;
            let t = spectral_coordinates(ctx, system, weight, &mut ());
            let mut q = system.left().tr_mul(g);
            // ∂L/∂h_i = <row_i(Uᵀ G), row_i(Vᵀ X W)>
            let dh = DVector::from_fn(q.nrows(), |i, _| q.row(i).dot(&t.row(i)));
            let dalpha = if kernel.spec.kind() == KernelKind::Identity {
                dh
            } else {
                kernel.k.tr_mul(&dh)
            };
            scale_rows(&mut q, &h);
            let mut dw = match ctx.projected {
                Some(vtx) => vtx.tr_mul(&q),
                None => x.tr_mul(&(system.right() * q)),
            };
            if ctx.beta != 0.0 {
                dw += ctx.beta * x.tr_mul(g);
            }
            Ok(ModelParams::Spectral {
                weight: dw,
                alpha: dalpha,
            })
        }
        (ModelKind::Mlp2, ModelParams::Mlp { w1, b1, w2, .. }) => {
            check_logit_cols(g, w2.ncols())?;
            let mut pre = x * w1;
            add_bias(&mut pre, b1);
            let hidden = pre.map(|v| v.max(0.0));
            let dw2 = hidden.tr_mul(g);
            let db2 = column_sums(g);
            let mut dpre = g * w2.transpose();
            dpre.zip_apply(&pre, |dv, p| {
                if p <= 0.0 {
                    *dv = 0.0
                }
            });
            let dw1 = x.tr_mul(&dpre);
            let db1 = column_sums(&dpre);
            Ok(ModelParams::Mlp {
                w1: dw1,
                b1: db1,
                w2: dw2,
                b2: db2,
            })
        }
        (kind, _) => Err(params_mismatch(kind)),
    }
}

/// `Vᵀ X W`, from the cached projection when there is one.
fn spectral_coordinates(
    ctx: &ForwardContext,
    system: &SpectralSystem,
    weight: &DMatrix<f64>,
    trace: &mut impl ShapeTrace,
) -> DMatrix<f64> {
    let t = match ctx.projected {
        Some(vtx) => vtx * weight,
        None => {
            let xw = ctx.features * weight;
            trace.record("XW", xw.nrows(), xw.ncols());
            system.right().tr_mul(&xw)
        }
    };
    trace.record("VtXW", t.nrows(), t.ncols());
    t
}

fn check_logit_cols(g: &DMatrix<f64>, classes: usize) -> Result<()> {
    if g.ncols() != classes {
        return Err(Error::Dimension(format!(
            "upstream gradient has {} columns, model emits {classes}",
            g.ncols()
        )));
    }
    Ok(())
}

fn column_sums(m: &DMatrix<f64>) -> DVector<f64> {
    DVector::from_iterator(m.ncols(), m.column_iter().map(|c| c.sum()))
}

fn uniform_matrix(rng: &mut ChaCha8Rng, rows: usize, cols: usize, fan_in: usize) -> DMatrix<f64> {
    let bound = 1.0 / (fan_in.max(1) as f64).sqrt();
    DMatrix::from_fn(rows, cols, |_, _| rng.random_range(-bound..=bound))
}

/// Starting point for the filter coefficients: the retained spectral values
/// for the identity kernel, otherwise the ridge least-squares solution of
/// `K α ≈ values`. Either way training starts at (or near) the truncated
/// representation itself.
pub fn initial_alpha(kernel: &KernelMatrix) -> DVector<f64> {
    let values = &kernel.values_used;
    if kernel.spec.kind() == KernelKind::Identity {
        return values.clone();
    }
    let r = kernel.rank();
    let mut gram = kernel.k.tr_mul(&kernel.k);
    for i in 0..r {
        gram[(i, i)] += ALPHA_INIT_RIDGE;
    }
    let rhs = kernel.k.tr_mul(values);
    match gram.clone().cholesky() {
        Some(ch) => ch.solve(&rhs),
        None => gram.lu().solve(&rhs).unwrap_or_else(|| DVector::zeros(r)),
    }
}

/// Random initialization: weights i.i.d. uniform in ±1/√fan_in, biases zero,
/// filter coefficients from [`initial_alpha`].
pub fn init_params(
    kind: ModelKind,
    ctx: &ForwardContext,
    num_classes: usize,
    hidden: usize,
    seed: u64,
) -> Result<ModelParams> {
    ctx.check(kind)?;
    let d = ctx.features.ncols();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    match kind {
        ModelKind::Linear | ModelKind::PropLinear => Ok(ModelParams::Linear {
            weight: uniform_matrix(&mut rng, d, num_classes, d),
        }),
        ModelKind::Kernel | ModelKind::LrKernel => {
            let Propagation::Spectral { kernel, .. } = ctx.propagation else {
                unreachable!("checked above")
            };
            Ok(ModelParams::Spectral {
                weight: uniform_matrix(&mut rng, d, num_classes, d),
                alpha: initial_alpha(kernel),
            })
        }
        ModelKind::Mlp2 => {
            if hidden == 0 {
                return Err(Error::InvalidArgument("hidden width must be >= 1".into()));
            }
            let w1 = uniform_matrix(&mut rng, d, hidden, d);
            let w2 = uniform_matrix(&mut rng, hidden, num_classes, hidden);
            Ok(ModelParams::Mlp {
                w1,
                b1: DVector::zeros(hidden),
                w2,
                b2: DVector::zeros(num_classes),
            })
        }
    }
}

/// Scalar-output spectral prediction at node `j` written as a Frobenius
/// inner product against the rank-one parameter `α βᵀ`:
///
/// `h_j = < Σ_i k̃_iʲ x̃_iᵀ , α βᵀ >_F`, with `k̃_iʲ = U[j,i] Kᵀ e_i` and
/// `x̃_i = Xᵀ v_i`.
///
/// Covers the spectral term only (no `βI` regularization).
pub fn sensing_form(
    system: &SpectralSystem,
    kernel: &KernelMatrix,
    alpha: &DVector<f64>,
    weight: &DMatrix<f64>,
    features: &DMatrix<f64>,
    j: usize,
) -> Result<f64> {
    if weight.ncols() != 1 {
        return Err(Error::InvalidArgument(format!(
            "matrix sensing form needs scalar outputs, got C = {}",
            weight.ncols()
        )));
    }
    let (r, d) = (system.rank(), features.ncols());
    if kernel.rank() != r || alpha.len() != r || weight.nrows() != d || j >= system.n() {
        return Err(Error::Dimension(
            "sensing form inputs are incoherent".into(),
        ));
    }
    // measurement matrix M_j = Σ_i k̃_i x̃_iᵀ, r × d
    let mut m = DMatrix::<f64>::zeros(r, d);
    for i in 0..r {
        let u_ji = system.left()[(j, i)];
        let k_tilde = kernel.k.row(i).transpose() * u_ji;
        let x_tilde = features.tr_mul(&system.right().column(i));
        m += k_tilde * x_tilde.transpose();
    }
    let beta = weight.column(0);
    let mut inner = 0.0;
    for a in 0..r {
        for b in 0..d {
            inner += m[(a, b)] * alpha[a] * beta[b];
        }
    }
    Ok(inner)
}
