//! Node-classification datasets: on-disk TSV/JSON format, validation,
//! summary statistics, and a stochastic-block-model generator for
//! synthetic instances.
//!
//! A dataset directory holds four files:
//!
//! ```text
//! meta.json     {"name": str, "n": int, "d": int, "C": int, "directed": bool}
//! features.tsv  n lines of d tab-separated floats
//! labels.tsv    n lines, one class index each
//! edges.tsv     one "src\tdst" pair per line, 0-indexed
//! ```

use std::fs;
use std::io::Write;
use std::path::Path;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub name: String,
    pub num_classes: usize,
    pub directed: bool,
    /// n × d, dense.
    pub features: DMatrix<f64>,
    pub labels: Vec<usize>,
    /// Canonical edge list: undirected edges appear once as (min, max),
    /// sorted and deduplicated in both cases.
    pub edges: Vec<(usize, usize)>,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq, Eq)]
pub struct Meta {
    pub name: String,
    pub n: usize,
    pub d: usize,
    #[serde(rename = "C")]
    pub classes: usize,
    pub directed: bool,
}

/// Counts in the same conventions as the benchmark statistics table:
/// undirected edges are counted once.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Summary {
    pub nodes: usize,
    pub edges: usize,
    pub features: usize,
    pub classes: usize,
}

impl Dataset {
    /// Builds a dataset, validating ranges and canonicalizing the edge list.
    pub fn new(
        name: impl Into<String>,
        num_classes: usize,
        directed: bool,
        features: DMatrix<f64>,
        labels: Vec<usize>,
        edges: Vec<(usize, usize)>,
    ) -> Result<Self> {
        let n = labels.len();
        if features.nrows() != n {
            return Err(Error::Dimension(format!(
                "{} feature rows for {} labels",
                features.nrows(),
                n
            )));
        }
        if let Some((i, &y)) = labels.iter().enumerate().find(|(_, &y)| y >= num_classes) {
            return Err(Error::OutOfRange(format!(
                "label {y} at node {i} with C = {num_classes}"
            )));
        }
        if let Some(&(s, t)) = edges.iter().find(|&&(s, t)| s >= n || t >= n) {
            return Err(Error::OutOfRange(format!("edge ({s}, {t}) with n = {n}")));
        }
        Ok(Dataset {
            name: name.into(),
            num_classes,
            directed,
            features,
            labels,
            edges: canonicalize_edges(edges, directed),
        })
    }

    pub fn num_nodes(&self) -> usize {
        self.labels.len()
    }

    pub fn feature_dim(&self) -> usize {
        self.features.ncols()
    }

    pub fn meta(&self) -> Meta {
        Meta {
            name: self.name.clone(),
            n: self.num_nodes(),
            d: self.feature_dim(),
            classes: self.num_classes,
            directed: self.directed,
        }
    }

    pub fn summary(&self) -> Summary {
        Summary {
            nodes: self.num_nodes(),
            edges: self.edges.len(),
            features: self.feature_dim(),
            classes: self.num_classes,
        }
    }

    /// Node indices grouped by class, each group in ascending order.
    pub fn class_members(&self) -> Vec<Vec<usize>> {
        let mut members = vec![Vec::new(); self.num_classes];
        for (i, &y) in self.labels.iter().enumerate() {
            members[y].push(i);
        }
        members
    }

    /// Copy of the dataset with each feature row scaled to unit L1 norm.
    /// All-zero rows are left untouched.
    pub fn row_normalized(&self) -> Dataset {
        let mut out = self.clone();
        for mut row in out.features.row_iter_mut() {
            let s: f64 = row.iter().map(|v| v.abs()).sum();
            if s > 0.0 {
                row /= s;
            }
        }
        out
    }
}

fn canonicalize_edges(mut edges: Vec<(usize, usize)>, directed: bool) -> Vec<(usize, usize)> {
    if !directed {
        for e in edges.iter_mut() {
            if e.0 > e.1 {
                *e = (e.1, e.0);
            }
        }
    }
    edges.sort_unstable();
    edges.dedup();
    edges
}

fn read_file(path: &Path) -> Result<String> {
    if !path.exists() {
        return Err(Error::MissingFile(path.to_path_buf()));
    }
    fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

fn parse_err(file: &str, line: usize, msg: impl Into<String>) -> Error {
    Error::Parse {
        file: file.to_string(),
        line,
        msg: msg.into(),
    }
}

/// Loads and validates a dataset directory. Undirected edge lists are
/// canonicalized (symmetrized) at load.
pub fn load_dataset(dir: impl AsRef<Path>) -> Result<Dataset> {
    let dir = dir.as_ref();
    let meta: Meta = serde_json::from_str(&read_file(&dir.join("meta.json"))?)?;

    let features_txt = read_file(&dir.join("features.tsv"))?;
    let rows: Vec<&str> = features_txt.lines().collect();
    if rows.len() != meta.n {
        return Err(Error::Dimension(format!(
            "features.tsv has {} rows, meta says n = {}",
            rows.len(),
            meta.n
        )));
    }
    let mut features = DMatrix::<f64>::zeros(meta.n, meta.d);
    for (i, row) in rows.iter().enumerate() {
        let mut count = 0;
        for (j, tok) in row.split('\t').filter(|t| !t.is_empty()).enumerate() {
            if j >= meta.d {
                count = j + 1;
                continue;
            }
            features[(i, j)] = tok
                .trim()
                .parse()
                .map_err(|_| parse_err("features.tsv", i + 1, format!("bad float {tok:?}")))?;
            count = j + 1;
        }
        if count != meta.d {
            return Err(Error::Dimension(format!(
                "features.tsv line {} has {} columns, meta says d = {}",
                i + 1,
                count,
                meta.d
            )));
        }
    }

    let labels_txt = read_file(&dir.join("labels.tsv"))?;
    let labels = labels_txt
        .lines()
        .enumerate()
        .map(|(i, l)| {
            l.trim()
                .parse::<usize>()
                .map_err(|_| parse_err("labels.tsv", i + 1, format!("bad label {l:?}")))
        })
        .collect::<Result<Vec<_>>>()?;
    if labels.len() != meta.n {
        return Err(Error::Dimension(format!(
            "labels.tsv has {} rows, meta says n = {}",
            labels.len(),
            meta.n
        )));
    }

    let edges_txt = read_file(&dir.join("edges.tsv"))?;
    let mut edges = Vec::new();
    for (i, line) in edges_txt.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let mut it = line.split_whitespace().map(|t| {
            t.parse::<usize>()
                .map_err(|_| parse_err("edges.tsv", i + 1, format!("bad index {t:?}")))
        });
        let (Some(s), Some(t), None) = (it.next(), it.next(), it.next()) else {
            return Err(parse_err("edges.tsv", i + 1, "expected two indices"));
        };
        edges.push((s?, t?));
    }

    Dataset::new(
        meta.name,
        meta.classes,
        meta.directed,
        features,
        labels,
        edges,
    )
}

/// Writes a dataset directory in canonical form. Floats use the shortest
/// representation that parses back to the identical value.
pub fn write_dataset(ds: &Dataset, dir: impl AsRef<Path>) -> Result<()> {
    let dir = dir.as_ref();
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let write = |name: &str, body: String| -> Result<()> {
        let p = dir.join(name);
        let mut f = fs::File::create(&p).map_err(|e| Error::io(&p, e))?;
        f.write_all(body.as_bytes()).map_err(|e| Error::io(&p, e))
    };

    write("meta.json", serde_json::to_string(&ds.meta())? + "\n")?;

    let mut body = String::new();
    for row in ds.features.row_iter() {
        let cols: Vec<String> = row.iter().map(|v| format!("{v:?}")).collect();
        body.push_str(&cols.join("\t"));
        body.push('\n');
    }
    write("features.tsv", body)?;

    let body: String = ds.labels.iter().map(|y| format!("{y}\n")).collect();
    write("labels.tsv", body)?;

    let body: String = ds
        .edges
        .iter()
        .map(|(s, t)| format!("{s}\t{t}\n"))
        .collect();
    write("edges.tsv", body)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FeatureMode {
    /// i.i.d. standard normal features, independent of the blocks.
    Noise,
    /// A standard-normal mean vector per block plus unit-variance noise.
    BlockMeans,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SbmConfig {
    pub block_sizes: Vec<usize>,
    pub intra_p: f64,
    pub inter_q: f64,
    pub feature_mode: FeatureMode,
    pub feature_dim: usize,
    pub seed: u64,
}

impl SbmConfig {
    pub fn validate(&self) -> Result<()> {
        if self.block_sizes.is_empty() || self.block_sizes.contains(&0) {
            return Err(Error::InvalidArgument(
                "block sizes must be a nonempty list of positive integers".into(),
            ));
        }
        if !(0.0 <= self.inter_q && self.inter_q <= self.intra_p && self.intra_p <= 1.0) {
            return Err(Error::InvalidArgument(format!(
                "need 0 <= inter_q <= intra_p <= 1, got q = {}, p = {}",
                self.inter_q, self.intra_p
            )));
        }
        if self.feature_dim == 0 {
            return Err(Error::InvalidArgument("feature_dim must be >= 1".into()));
        }
        Ok(())
    }
}

/// Samples an undirected stochastic-block-model graph. Nodes are numbered
/// block by block and labelled with their block index.
pub fn generate_sbm(cfg: &SbmConfig) -> Result<Dataset> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let labels: Vec<usize> = cfg
        .block_sizes
        .iter()
        .enumerate()
        .flat_map(|(b, &size)| std::iter::repeat_n(b, size))
        .collect();
    let n = labels.len();

    let mut edges = Vec::new();
    for i in 0..n {
        for j in (i + 1)..n {
            let p = if labels[i] == labels[j] {
                cfg.intra_p
            } else {
                cfg.inter_q
            };
            if rng.random_bool(p) {
                edges.push((i, j));
            }
        }
    }

    let d = cfg.feature_dim;
    let means = match cfg.feature_mode {
        FeatureMode::Noise => DMatrix::zeros(cfg.block_sizes.len(), d),
        FeatureMode::BlockMeans => DMatrix::from_fn(cfg.block_sizes.len(), d, |_, _| {
            rng.sample::<f64, _>(StandardNormal)
        }),
    };
    let mut features = DMatrix::zeros(n, d);
    for i in 0..n {
        for j in 0..d {
            let noise: f64 = rng.sample(StandardNormal);
            features[(i, j)] = means[(labels[i], j)] + noise;
        }
    }

    Dataset::new("sbm", cfg.block_sizes.len(), false, features, labels, edges)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny(edges: Vec<(usize, usize)>, directed: bool) -> Dataset {
        Dataset::new(
            "tiny",
            2,
            directed,
            DMatrix::from_row_slice(3, 2, &[1.0, 0.0, 0.5, 0.25, -3.0, 1e-17]),
            vec![0, 1, 1],
            edges,
        )
        .unwrap()
    }

    #[test]
    fn undirected_edges_canonicalized() {
        let ds = tiny(vec![(2, 0), (0, 2), (1, 0), (1, 1)], false);
        assert_eq!(ds.edges, vec![(0, 1), (0, 2), (1, 1)]);
        let ds = tiny(vec![(2, 0), (0, 2), (2, 0)], true);
        assert_eq!(ds.edges, vec![(0, 2), (2, 0)]);
    }

    #[test]
    fn edgeless_graph_loads() {
        let dir = tempfile::tempdir().unwrap();
        let ds = tiny(vec![], false);
        write_dataset(&ds, dir.path()).unwrap();
        let back = load_dataset(dir.path()).unwrap();
        assert_eq!(back.num_nodes(), 3);
        assert!(back.edges.is_empty());
        assert_eq!(
            back.summary(),
            Summary {
                nodes: 3,
                edges: 0,
                features: 2,
                classes: 2
            }
        );
    }

    #[test]
    fn out_of_range_edge_rejected() {
        let dir = tempfile::tempdir().unwrap();
        write_dataset(&tiny(vec![], false), dir.path()).unwrap();
        fs::write(dir.path().join("edges.tsv"), "5\t0\n").unwrap();
        assert!(matches!(
            load_dataset(dir.path()),
            Err(Error::OutOfRange(_))
        ));
    }

    #[test]
    fn out_of_range_label_rejected() {
        let dir = tempfile::tempdir().unwrap();
        write_dataset(&tiny(vec![], false), dir.path()).unwrap();
        fs::write(dir.path().join("labels.tsv"), "0\n1\n2\n").unwrap();
        assert!(matches!(
            load_dataset(dir.path()),
            Err(Error::OutOfRange(_))
        ));
    }

    #[test]
    fn meta_dimension_mismatch_rejected() {
        let dir = tempfile::tempdir().unwrap();
        write_dataset(&tiny(vec![], false), dir.path()).unwrap();
        fs::write(
            dir.path().join("meta.json"),
            r#"{"name":"tiny","n":3,"d":3,"C":2,"directed":false}"#,
        )
        .unwrap();
        assert!(matches!(load_dataset(dir.path()), Err(Error::Dimension(_))));
        fs::write(
            dir.path().join("meta.json"),
            r#"{"name":"tiny","n":4,"d":2,"C":2,"directed":false}"#,
        )
        .unwrap();
        assert!(matches!(load_dataset(dir.path()), Err(Error::Dimension(_))));
    }

    #[test]
    fn missing_file_reported() {
        let dir = tempfile::tempdir().unwrap();
        write_dataset(&tiny(vec![], false), dir.path()).unwrap();
        fs::remove_file(dir.path().join("labels.tsv")).unwrap();
        assert!(matches!(
            load_dataset(dir.path()),
            Err(Error::MissingFile(_))
        ));
    }

    #[test]
    fn write_load_write_is_byte_identical() {
        let a = tempfile::tempdir().unwrap();
        let b = tempfile::tempdir().unwrap();
        let ds = tiny(vec![(0, 1), (2, 1)], false);
        write_dataset(&ds, a.path()).unwrap();
        let back = load_dataset(a.path()).unwrap();
        assert_eq!(back, ds);
        write_dataset(&back, b.path()).unwrap();
        for f in ["meta.json", "features.tsv", "labels.tsv", "edges.tsv"] {
            assert_eq!(
                fs::read(a.path().join(f)).unwrap(),
                fs::read(b.path().join(f)).unwrap(),
                "{f}"
            );
        }
    }

    #[test]
    fn sbm_probability_one_zero_gives_cliques() {
        let ds = generate_sbm(&SbmConfig {
            block_sizes: vec![50, 50],
            intra_p: 1.0,
            inter_q: 0.0,
            feature_mode: FeatureMode::Noise,
            feature_dim: 3,
            seed: 1,
        })
        .unwrap();
        assert_eq!(ds.edges.len(), 2 * 50 * 49 / 2);
        assert!(ds.edges.iter().all(|&(s, t)| ds.labels[s] == ds.labels[t]));
        assert_eq!(&ds.labels[..50], &[0; 50][..]);
        assert_eq!(&ds.labels[50..], &[1; 50][..]);
    }

    #[test]
    fn sbm_is_deterministic() {
        let cfg = SbmConfig {
            block_sizes: vec![20, 30],
            intra_p: 0.3,
            inter_q: 0.1,
            feature_mode: FeatureMode::BlockMeans,
            feature_dim: 4,
            seed: 99,
        };
        assert_eq!(generate_sbm(&cfg).unwrap(), generate_sbm(&cfg).unwrap());
    }

    #[test]
    fn sbm_edge_count_matches_expectation() {
        // E = 2·C(100,2)·0.5 + 100·100·0.05 = 5450;
        // Var = 2·C(100,2)·0.25 + 10000·0.05·0.95 = 2475 + 475 = 2950.
        let cfg = SbmConfig {
            block_sizes: vec![100, 100],
            intra_p: 0.5,
            inter_q: 0.05,
            feature_mode: FeatureMode::Noise,
            feature_dim: 1,
            seed: 7,
        };
        let sd = 2950f64.sqrt();
        for seed in 0..5 {
            let ds = generate_sbm(&SbmConfig {
                seed,
                ..cfg.clone()
            })
            .unwrap();
            let dev = (ds.edges.len() as f64 - 5450.0).abs();
            assert!(dev <= 4.0 * sd, "seed {seed}: {} edges", ds.edges.len());
        }
    }

    #[test]
    fn sbm_rejects_bad_probabilities() {
        let cfg = SbmConfig {
            block_sizes: vec![5],
            intra_p: 0.1,
            inter_q: 0.2,
            feature_mode: FeatureMode::Noise,
            feature_dim: 1,
            seed: 0,
        };
        assert!(generate_sbm(&cfg).is_err());
    }
}
