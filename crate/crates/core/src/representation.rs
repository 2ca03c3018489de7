//! Dense matrix representations of a graph.

use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::dataset::Dataset;
use crate::error::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ReprKind {
    #[serde(rename = "adj")]
    Adjacency,
    #[serde(rename = "lap")]
    Laplacian,
    #[serde(rename = "nadj")]
    NormAdjacency,
    #[serde(rename = "nlap")]
    NormLaplacian,
}

impl ReprKind {
    pub const ALL: [ReprKind; 4] = [
        ReprKind::Adjacency,
        ReprKind::Laplacian,
        ReprKind::NormAdjacency,
        ReprKind::NormLaplacian,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ReprKind::Adjacency => "adj",
            ReprKind::Laplacian => "lap",
            ReprKind::NormAdjacency => "nadj",
            ReprKind::NormLaplacian => "nlap",
        }
    }
}

impl fmt::Display for ReprKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.pad(self.as_str())
    }
}

impl FromStr for ReprKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "adj" | "adjacency" => Ok(ReprKind::Adjacency),
            "lap" | "laplacian" => Ok(ReprKind::Laplacian),
            "nadj" | "norm_adjacency" => Ok(ReprKind::NormAdjacency),
            "nlap" | "norm_laplacian" => Ok(ReprKind::NormLaplacian),
            _ => Err(Error::InvalidArgument(format!(
                "unknown representation {s:?}"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GraphMatrix {
    pub values: DMatrix<f64>,
    /// True iff the source graph is undirected.
    pub symmetric: bool,
    pub kind: ReprKind,
}

/// Binary adjacency with `A[dst, src] = 1`, so that row i of `A X` sums the
/// features of i's in-neighbours.
pub fn adjacency(ds: &Dataset) -> DMatrix<f64> {
    let n = ds.num_nodes();
    let mut a = DMatrix::zeros(n, n);
    for &(s, t) in &ds.edges {
        a[(t, s)] = 1.0;
        if !ds.directed {
            a[(s, t)] = 1.0;
        }
    }
    a
}

/// Column-wise sums of `a`.
pub fn degrees(a: &DMatrix<f64>) -> DVector<f64> {
    DVector::from_iterator(a.ncols(), a.column_iter().map(|c| c.sum()))
}

fn inv_sqrt_degrees(a: &DMatrix<f64>) -> DVector<f64> {
    // 0^{-1/2} := 0 for isolated nodes
    degrees(a).map(|d| if d > 0.0 { d.powf(-0.5) } else { 0.0 })
}

fn sym_normalize(a: &DMatrix<f64>) -> DMatrix<f64> {
    let s = inv_sqrt_degrees(a);
    DMatrix::from_fn(a.nrows(), a.ncols(), |i, j| s[i] * a[(i, j)] * s[j])
}

pub fn build_representation(ds: &Dataset, kind: ReprKind) -> GraphMatrix {
    let a = adjacency(ds);
    let n = a.nrows();
    let values = match kind {
        ReprKind::Adjacency => a,
        ReprKind::Laplacian => {
            let mut l = -a.clone();
            for (j, d) in degrees(&a).iter().enumerate() {
                l[(j, j)] += d;
            }
            l
        }
        ReprKind::NormAdjacency => sym_normalize(&a),
        ReprKind::NormLaplacian => DMatrix::identity(n, n) - sym_normalize(&a),
    };
    GraphMatrix {
        values,
        symmetric: !ds.directed,
        kind,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn graph(n: usize, edges: Vec<(usize, usize)>, directed: bool) -> Dataset {
        Dataset::new("g", 1, directed, DMatrix::zeros(n, 1), vec![0; n], edges).unwrap()
    }

    #[test]
    fn single_edge_representations() {
        let ds = graph(2, vec![(0, 1)], false);
        let a = build_representation(&ds, ReprKind::Adjacency);
        assert_eq!(a.values, DMatrix::from_row_slice(2, 2, &[0., 1., 1., 0.]));
        assert!(a.symmetric);
        let l = build_representation(&ds, ReprKind::Laplacian);
        assert_eq!(l.values, DMatrix::from_row_slice(2, 2, &[1., -1., -1., 1.]));
        let na = build_representation(&ds, ReprKind::NormAdjacency);
        assert_eq!(na.values, DMatrix::from_row_slice(2, 2, &[0., 1., 1., 0.]));
    }

    #[test]
    fn isolated_node_norm_laplacian_is_one() {
        let ds = graph(1, vec![], false);
        let nl = build_representation(&ds, ReprKind::NormLaplacian);
        assert_eq!(nl.values, DMatrix::from_element(1, 1, 1.0));
    }

    #[test]
    fn directed_edge_lands_in_destination_row() {
        let ds = graph(3, vec![(0, 2)], true);
        let a = build_representation(&ds, ReprKind::Adjacency);
        assert_eq!(a.values[(2, 0)], 1.0);
        assert_eq!(a.values[(0, 2)], 0.0);
        assert!(!a.symmetric);
        // column sums: node 0 has one outgoing edge
        let l = build_representation(&ds, ReprKind::Laplacian);
        assert_eq!(l.values[(0, 0)], 1.0);
        assert_eq!(l.values[(2, 2)], 0.0);
    }

    #[test]
    fn laplacian_rows_sum_to_zero() {
        let ds = graph(5, vec![(0, 1), (1, 2), (2, 3), (3, 0), (0, 4)], false);
        let l = build_representation(&ds, ReprKind::Laplacian);
        for row in l.values.row_iter() {
            assert_eq!(row.sum(), 0.0);
        }
    }

    #[test]
    fn parse_round_trip() {
        for k in ReprKind::ALL {
            assert_eq!(k.as_str().parse::<ReprKind>().unwrap(), k);
        }
        assert!("rw".parse::<ReprKind>().is_err());
    }
}
