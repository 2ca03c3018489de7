//! Kernel-reshaped spectral filters.
//!
//! A filter assigns the response `h_i = (K α)_i` to the i-th retained
//! spectral component, where `K` is a kernel Gram matrix over the retained
//! spectral values and `α` is trainable. The propagation operator is then
//! `U diag(K α) Vᵀ`.

use std::fmt;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spectral::SpectralSystem;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum KernelKind {
    #[serde(rename = "id")]
    Identity,
    #[serde(rename = "lin")]
    Linear,
    #[serde(rename = "sobc")]
    SobolevCompact,
    #[serde(rename = "sobu")]
    SobolevUnbounded,
    #[serde(rename = "rbf")]
    GaussianRbf,
}

impl KernelKind {
    pub const ALL: [KernelKind; 5] = [
        KernelKind::Identity,
        KernelKind::SobolevCompact,
        KernelKind::Linear,
        KernelKind::SobolevUnbounded,
        KernelKind::GaussianRbf,
    ];

    pub fn needs_gamma(self) -> bool {
        matches!(self, KernelKind::SobolevUnbounded | KernelKind::GaussianRbf)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            KernelKind::Identity => "id",
            KernelKind::Linear => "lin",
            KernelKind::SobolevCompact => "sobc",
            KernelKind::SobolevUnbounded => "sobu",
            KernelKind::GaussianRbf => "rbf",
        }
    }
}

impl fmt::Display for KernelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.pad(self.as_str())
    }
}

impl std::str::FromStr for KernelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "id" | "identity" => Ok(KernelKind::Identity),
            "lin" | "linear" => Ok(KernelKind::Linear),
            "sobc" | "sobolev_compact" => Ok(KernelKind::SobolevCompact),
            "sobu" | "sobolev_unbounded" => Ok(KernelKind::SobolevUnbounded),
            "rbf" | "gaussian_rbf" => Ok(KernelKind::GaussianRbf),
            _ => Err(Error::InvalidArgument(format!("unknown kernel {s:?}"))),
        }
    }
}

/// A kernel kind together with its bandwidth, when it has one.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KernelSpec {
    kind: KernelKind,
    gamma: Option<f64>,
}

impl KernelSpec {
    pub fn new(kind: KernelKind, gamma: Option<f64>) -> Result<Self> {
        match (kind.needs_gamma(), gamma) {
            (true, Some(g)) if g > 0.0 && g.is_finite() => Ok(KernelSpec { kind, gamma }),
            (true, _) => Err(Error::InvalidArgument(format!(
                "kernel {kind} needs a positive bandwidth, got {gamma:?}"
            ))),
            (false, None) => Ok(KernelSpec { kind, gamma }),
            (false, Some(_)) => Err(Error::InvalidArgument(format!(
                "kernel {kind} takes no bandwidth"
            ))),
        }
    }

    pub fn identity() -> Self {
        KernelSpec {
            kind: KernelKind::Identity,
            gamma: None,
        }
    }

    pub fn kind(&self) -> KernelKind {
        self.kind
    }

    pub fn gamma(&self) -> Option<f64> {
        self.gamma
    }
}

impl fmt::Display for KernelSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.gamma {
            Some(g) => write!(f, "{}(γ={g})", self.kind),
            None => write!(f, "{}", self.kind),
        }
    }
}

/// Evaluates the kernel on two spectral values. The exponential kernels use
/// the decaying forms `exp(-γ|s-t|)` and `exp(-γ|s-t|²)`.
pub fn kernel_eval(spec: &KernelSpec, s: f64, t: f64) -> Result<f64> {
    let gamma = spec.gamma.unwrap_or(0.0);
    match spec.kind {
        KernelKind::Identity => Err(Error::InvalidArgument(
            "the identity kernel is defined on component indices, not values".into(),
        )),
        KernelKind::Linear => Ok(s * t),
        KernelKind::SobolevCompact => Ok(s.min(t)),
        KernelKind::SobolevUnbounded => Ok((-gamma * (s - t).abs()).exp()),
        KernelKind::GaussianRbf => Ok((-gamma * (s - t).powi(2)).exp()),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct KernelMatrix {
    pub k: DMatrix<f64>,
    pub spec: KernelSpec,
    pub values_used: DVector<f64>,
}

impl KernelMatrix {
    pub fn rank(&self) -> usize {
        self.k.nrows()
    }
}

/// Gram matrix over the retained spectral values.
pub fn kernel_matrix(spec: &KernelSpec, values: &DVector<f64>) -> KernelMatrix {
    let r = values.len();
    let k = match spec.kind {
        KernelKind::Identity => DMatrix::identity(r, r),
        _ => DMatrix::from_fn(r, r, |i, j| {
            kernel_eval(spec, values[i], values[j]).expect("value-level kernel")
        }),
    };
    KernelMatrix {
        k,
        spec: *spec,
        values_used: values.clone(),
    }
}

/// Filter responses `K α`.
pub fn filter_values(kernel: &KernelMatrix, alpha: &DVector<f64>) -> Result<DVector<f64>> {
    if alpha.len() != kernel.rank() {
        return Err(Error::Dimension(format!(
            "alpha has {} entries, kernel is {}×{}",
            alpha.len(),
            kernel.rank(),
            kernel.rank()
        )));
    }
    if kernel.spec.kind == KernelKind::Identity {
        return Ok(alpha.clone());
    }
    Ok(&kernel.k * alpha)
}

/// Materializes `U diag(K α) Vᵀ` as a dense n × n matrix.
pub fn build_propagation(
    sys: &SpectralSystem,
    kernel: &KernelMatrix,
    alpha: &DVector<f64>,
) -> Result<DMatrix<f64>> {
    if sys.rank() != kernel.rank() {
        return Err(Error::Dimension(format!(
            "system has rank {}, kernel has rank {}",
            sys.rank(),
            kernel.rank()
        )));
    }
    let h = filter_values(kernel, alpha)?;
    let mut scaled = sys.left().clone();
    for (j, mut col) in scaled.column_iter_mut().enumerate() {
        col *= h[j];
    }
    Ok(scaled * sys.right().transpose())
}

/// `P + β I`.
pub fn regularize(p: &DMatrix<f64>, beta: f64) -> Result<DMatrix<f64>> {
    if !p.is_square() {
        return Err(Error::Dimension(format!(
            "expected a square operator, got {:?}",
            p.shape()
        )));
    }
    let mut out = p.clone();
    for i in 0..out.nrows() {
        out[(i, i)] += beta;
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::decompose_matrix;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn spec(kind: KernelKind, gamma: Option<f64>) -> KernelSpec {
        KernelSpec::new(kind, gamma).unwrap()
    }

    #[test]
    fn kernel_eval_examples() {
        assert_eq!(
            kernel_eval(&spec(KernelKind::Linear, None), 2.0, 3.0).unwrap(),
            6.0
        );
        let rbf = spec(KernelKind::GaussianRbf, Some(1.0));
        assert_eq!(kernel_eval(&rbf, 0.7, 0.7).unwrap(), 1.0);
        let sobu = spec(KernelKind::SobolevUnbounded, Some(1.0));
        assert!((kernel_eval(&sobu, 2.0, 3.0).unwrap() - 0.36787944117144233).abs() < 1e-15);
        assert!(kernel_eval(&KernelSpec::identity(), 1.0, 1.0).is_err());
    }

    #[test]
    fn spec_validation() {
        assert!(KernelSpec::new(KernelKind::GaussianRbf, None).is_err());
        assert!(KernelSpec::new(KernelKind::GaussianRbf, Some(0.0)).is_err());
        assert!(KernelSpec::new(KernelKind::Linear, Some(1.0)).is_err());
    }

    #[test]
    fn kernel_matrix_examples() {
        let v = DVector::from_vec(vec![5.0, -1.0, 2.0]);
        assert_eq!(
            kernel_matrix(&KernelSpec::identity(), &v).k,
            DMatrix::identity(3, 3)
        );

        let v = DVector::from_vec(vec![2.0, 1.0]);
        let lin = kernel_matrix(&spec(KernelKind::Linear, None), &v);
        assert_eq!(lin.k, DMatrix::from_row_slice(2, 2, &[4., 2., 2., 1.]));

        let v = DVector::from_vec(vec![3.0, -2.0]);
        let sobc = kernel_matrix(&spec(KernelKind::SobolevCompact, None), &v);
        assert_eq!(sobc.k, DMatrix::from_row_slice(2, 2, &[3., -2., -2., -2.]));
    }

    #[test]
    fn kernel_diagonals() {
        let v = DVector::from_vec(vec![1.5, -0.5, 0.25]);
        for (kind, gamma) in [
            (KernelKind::Linear, None),
            (KernelKind::SobolevCompact, None),
            (KernelKind::SobolevUnbounded, Some(0.3)),
            (KernelKind::GaussianRbf, Some(2.0)),
        ] {
            let km = kernel_matrix(&spec(kind, gamma), &v);
            assert_eq!(km.k, km.k.transpose());
            for i in 0..3 {
                let expected = match kind {
                    KernelKind::Linear => v[i] * v[i],
                    KernelKind::SobolevCompact => v[i],
                    _ => 1.0,
                };
                assert_eq!(km.k[(i, i)], expected);
            }
        }
    }

    #[test]
    fn filter_values_examples() {
        let alpha = DVector::from_vec(vec![0.3, -1.0]);
        let id = kernel_matrix(&KernelSpec::identity(), &DVector::from_vec(vec![9.0, 8.0]));
        assert_eq!(filter_values(&id, &alpha).unwrap(), alpha);

        let lin = kernel_matrix(
            &spec(KernelKind::Linear, None),
            &DVector::from_vec(vec![2.0, 1.0]),
        );
        let h = filter_values(&lin, &DVector::from_vec(vec![1.0, 0.0])).unwrap();
        assert_eq!(h.as_slice(), &[4.0, 2.0]);

        assert!(filter_values(&lin, &DVector::zeros(3)).is_err());
    }

    #[test]
    fn filter_values_match_naive_dot_products() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let v = DVector::from_fn(12, |_, _| rng.random_range(-2.0..2.0));
        let alpha = DVector::from_fn(12, |_, _| rng.random_range(-1.0..1.0));
        let km = kernel_matrix(&spec(KernelKind::GaussianRbf, Some(0.7)), &v);
        let h = filter_values(&km, &alpha).unwrap();
        for i in 0..12 {
            let mut dot = 0.0;
            for j in 0..12 {
                dot += km.k[(i, j)] * alpha[j];
            }
            assert!((h[i] - dot).abs() <= 1e-12);
        }
    }

    #[test]
    fn propagation_examples() {
        let m = DMatrix::from_row_slice(2, 2, &[2.0, 0.0, 0.0, 1.0]);
        let sys = decompose_matrix(&m, true, None).unwrap();
        let id = kernel_matrix(&KernelSpec::identity(), sys.values());
        let p = build_propagation(&sys, &id, &DVector::from_vec(vec![2.0, 0.0])).unwrap();
        assert!((p - DMatrix::from_row_slice(2, 2, &[2.0, 0.0, 0.0, 0.0])).norm() < 1e-14);
        let p0 = build_propagation(&sys, &id, &DVector::zeros(2)).unwrap();
        assert_eq!(p0, DMatrix::zeros(2, 2));

        let trunc = sys.truncate(0.5).unwrap();
        assert!(build_propagation(&trunc, &id, &DVector::zeros(1)).is_err());
    }

    #[test]
    fn regularize_examples() {
        let p = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 3.0, 4.0]);
        assert_eq!(regularize(&p, 0.0).unwrap(), p);
        assert_eq!(
            regularize(&DMatrix::zeros(3, 3), 1.0).unwrap(),
            DMatrix::identity(3, 3)
        );
        let r = regularize(&p, 0.5).unwrap();
        assert_eq!(r.trace(), p.trace() + 2.0 * 0.5);
        assert!(regularize(&DMatrix::zeros(2, 3), 1.0).is_err());
    }
}
