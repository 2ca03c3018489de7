//! Ordered spectral systems of graph matrices: symmetric eigendecomposition
//! for undirected graphs, SVD for directed ones, plus rank truncation and an
//! on-disk cache.
//!
//! Components are ordered by decreasing magnitude of the spectral value.
//! Equal magnitudes are broken by descending signed value and then by the
//! solver's original index, so truncation boundaries are deterministic.
//! Each left vector is sign-normalized so that its largest-magnitude entry
//! is nonnegative; the matching right vector is flipped along with it.

use std::cmp::Ordering;
use std::fs;
use std::path::Path;

use nalgebra::{DMatrix, DVector};
use twox_hash::XxHash64;

use crate::error::{Error, Result};
use crate::representation::{GraphMatrix, ReprKind};

pub const CACHE_MAGIC: &[u8; 8] = b"SPECSYS1";

#[derive(Debug, Clone, PartialEq)]
pub struct SpectralSystem {
    u: DMatrix<f64>,
    values: DVector<f64>,
    /// `None` for symmetric systems, where V = U.
    v: Option<DMatrix<f64>>,
    source_kind: Option<ReprKind>,
}

impl SpectralSystem {
    /// Assembles a system from raw solver output, applying the ordering and
    /// sign conventions. `v = None` marks a symmetric system.
    pub fn from_parts(
        u: DMatrix<f64>,
        values: DVector<f64>,
        v: Option<DMatrix<f64>>,
        source_kind: Option<ReprKind>,
    ) -> Result<Self> {
        let r = values.len();
        if u.ncols() != r || v.as_ref().is_some_and(|v| v.shape() != u.shape()) {
            return Err(Error::Dimension(format!(
                "U is {:?}, {} values, V is {:?}",
                u.shape(),
                r,
                v.as_ref().map(|v| v.shape())
            )));
        }
        let mut order: Vec<usize> = (0..r).collect();
        order.sort_by(|&a, &b| compare_values(values[a], values[b]).then(a.cmp(&b)));

        let mut u = u.select_columns(&order);
        let values = DVector::from_iterator(r, order.iter().map(|&i| values[i]));
        let mut v = v.map(|v| v.select_columns(&order));

        for j in 0..r {
            if needs_flip(u.column(j).as_slice()) {
                u.column_mut(j).neg_mut();
                if let Some(v) = v.as_mut() {
                    v.column_mut(j).neg_mut();
                }
            }
        }
        Ok(SpectralSystem {
            u,
            values,
            v,
            source_kind,
        })
    }

    pub fn n(&self) -> usize {
        self.u.nrows()
    }

    pub fn rank(&self) -> usize {
        self.values.len()
    }

    pub fn is_symmetric(&self) -> bool {
        self.v.is_none()
    }

    pub fn source_kind(&self) -> Option<ReprKind> {
        self.source_kind
    }

    pub fn left(&self) -> &DMatrix<f64> {
        &self.u
    }

    pub fn right(&self) -> &DMatrix<f64> {
        self.v.as_ref().unwrap_or(&self.u)
    }

    pub fn values(&self) -> &DVector<f64> {
        &self.values
    }

    /// `U diag(values) Vᵀ`.
    pub fn reconstruct(&self) -> DMatrix<f64> {
        let mut scaled = self.u.clone();
        for (j, mut col) in scaled.column_iter_mut().enumerate() {
            col *= self.values[j];
        }
        scaled * self.right().transpose()
    }

    /// Keeps the leading `n - floor(factor * n)` components.
    pub fn truncate(&self, factor: f64) -> Result<SpectralSystem> {
        let r = retained_rank(self.n(), factor)?;
        if r > self.rank() {
            return Err(Error::InvalidArgument(format!(
                "factor {factor} keeps {r} components but the system only has {}",
                self.rank()
            )));
        }
        if r == self.rank() {
            return Ok(self.clone());
        }
        Ok(SpectralSystem {
            u: self.u.columns(0, r).into_owned(),
            values: self.values.rows(0, r).into_owned(),
            v: self.v.as_ref().map(|v| v.columns(0, r).into_owned()),
            source_kind: self.source_kind,
        })
    }
}

/// Descending magnitude, then descending signed value.
fn compare_values(a: f64, b: f64) -> Ordering {
    b.abs().total_cmp(&a.abs()).then_with(|| b.total_cmp(&a))
}

fn needs_flip(col: &[f64]) -> bool {
    let mut best = 0.0f64;
    let mut sign_negative = false;
    for &x in col {
        if x.abs() > best {
            best = x.abs();
            sign_negative = x < 0.0;
        }
    }
    sign_negative
}

/// Number of components kept by a truncation factor in `[0, 1)`.
pub fn retained_rank(n: usize, factor: f64) -> Result<usize> {
    if !(0.0..1.0).contains(&factor) {
        return Err(Error::InvalidArgument(format!(
            "truncation factor {factor} outside [0, 1)"
        )));
    }
    // grid factors such as 0.05·k are not exact binary fractions
    let dropped = (factor * n as f64 + 1e-9).floor() as usize;
    let kept = n.saturating_sub(dropped);
    // never truncate a nonempty system to nothing
    Ok(if n > 0 { kept.max(1) } else { 0 })
}

fn to_faer(m: &DMatrix<f64>) -> faer::Mat<f64> {
    faer::Mat::from_fn(m.nrows(), m.ncols(), |i, j| m[(i, j)])
}

fn from_faer(m: faer::MatRef<'_, f64>) -> DMatrix<f64> {
    DMatrix::from_fn(m.nrows(), m.ncols(), |i, j| m[(i, j)])
}

/// Full-rank decomposition: eigendecomposition when the matrix is flagged
/// symmetric, SVD otherwise.
pub fn decompose(m: &GraphMatrix) -> Result<SpectralSystem> {
    decompose_matrix(&m.values, m.symmetric, Some(m.kind))
}

pub fn decompose_matrix(
    values: &DMatrix<f64>,
    symmetric: bool,
    source_kind: Option<ReprKind>,
) -> Result<SpectralSystem> {
    if !values.is_square() {
        return Err(Error::Dimension(format!(
            "expected a square matrix, got {:?}",
            values.shape()
        )));
    }
    if values.iter().any(|x| !x.is_finite()) {
        return Err(Error::InvalidArgument(
            "matrix has non-finite entries".into(),
        ));
    }
    let mat = to_faer(values);
    if symmetric {
        let evd = mat
            .self_adjoint_eigen(faer::Side::Lower)
            .map_err(|_| Error::NoConvergence("symmetric eigendecomposition"))?;
        let s = evd.S().column_vector();
        let vals = DVector::from_fn(s.nrows(), |i, _| s[i]);
        SpectralSystem::from_parts(from_faer(evd.U()), vals, None, source_kind)
    } else {
        let svd = mat
            .svd()
            .map_err(|_| Error::NoConvergence("singular value decomposition"))?;
        let s = svd.S().column_vector();
        let vals = DVector::from_fn(s.nrows(), |i, _| s[i]);
        SpectralSystem::from_parts(
            from_faer(svd.U()),
            vals,
            Some(from_faer(svd.V())),
            source_kind,
        )
    }
}

fn push_matrix(buf: &mut Vec<u8>, m: &DMatrix<f64>) {
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            buf.extend_from_slice(&m[(i, j)].to_le_bytes());
        }
    }
}

/// Serializes `sys` to the cache format.
pub fn encode_cache(sys: &SpectralSystem) -> Vec<u8> {
    let (n, r) = (sys.n(), sys.rank());
    let mut buf = Vec::with_capacity(8 + 17 + 8 * (r + 2 * n * r) + 8);
    buf.extend_from_slice(CACHE_MAGIC);
    buf.extend_from_slice(&(n as u64).to_le_bytes());
    buf.extend_from_slice(&(r as u64).to_le_bytes());
    buf.push(sys.is_symmetric() as u8);
    for x in sys.values.iter() {
        buf.extend_from_slice(&x.to_le_bytes());
    }
    push_matrix(&mut buf, &sys.u);
    push_matrix(&mut buf, sys.right());
    let checksum = XxHash64::oneshot(0, &buf[8..]);
    buf.extend_from_slice(&checksum.to_le_bytes());
    buf
}

pub fn decode_cache(bytes: &[u8]) -> Result<SpectralSystem> {
    const HEADER: usize = 8 + 8 + 8 + 1;
    if bytes.len() < 8 || &bytes[..8] != CACHE_MAGIC {
        let found = String::from_utf8_lossy(&bytes[..bytes.len().min(8)]).into_owned();
        return Err(Error::CacheVersion {
            expected: String::from_utf8_lossy(CACHE_MAGIC).into_owned(),
            found,
        });
    }
    if bytes.len() < HEADER + 8 {
        return Err(Error::Dimension(format!(
            "cache file is truncated ({} bytes)",
            bytes.len()
        )));
    }
    let (payload, tail) = bytes.split_at(bytes.len() - 8);
    let stored = u64::from_le_bytes(tail.try_into().unwrap());
    let computed = XxHash64::oneshot(0, &payload[8..]);
    if stored != computed {
        return Err(Error::Checksum { stored, computed });
    }

    let read_u64 = |at: usize| u64::from_le_bytes(payload[at..at + 8].try_into().unwrap());
    let n = read_u64(8) as usize;
    let r = read_u64(16) as usize;
    let symmetric = match payload[24] {
        0 => false,
        1 => true,
        b => {
            return Err(Error::InvalidArgument(format!("bad symmetry flag {b}")));
        }
    };
    let expected = r
        .checked_mul(2 * n + 1)
        .and_then(|k| k.checked_mul(8))
        .and_then(|k| k.checked_add(HEADER));
    if expected != Some(payload.len()) || r > n {
        return Err(Error::Dimension(format!(
            "cache header says n = {n}, r = {r} but payload is {} bytes",
            payload.len()
        )));
    }
    let mut floats = payload[HEADER..]
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()));
    let values = DVector::from_iterator(r, floats.by_ref().take(r));
    let u = DMatrix::from_row_iterator(n, r, floats.by_ref().take(n * r));
    let v = DMatrix::from_row_iterator(n, r, floats.by_ref().take(n * r));
    Ok(SpectralSystem {
        u,
        values,
        v: if symmetric { None } else { Some(v) },
        source_kind: None,
    })
}

pub fn save_cache(sys: &SpectralSystem, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, encode_cache(sys)).map_err(|e| Error::io(path, e))
}

pub fn load_cache(path: impl AsRef<Path>) -> Result<SpectralSystem> {
    let path = path.as_ref();
    if !path.exists() {
        return Err(Error::MissingFile(path.to_path_buf()));
    }
    decode_cache(&fs::read(path).map_err(|e| Error::io(path, e))?)
}

/// Loads a cached system and truncates it in one step.
pub fn load_cache_truncated(path: impl AsRef<Path>, factor: f64) -> Result<SpectralSystem> {
    load_cache(path)?.truncate(factor)
}
