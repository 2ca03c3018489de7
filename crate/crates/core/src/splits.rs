//! Train/validation/test split conventions.
//!
//! * `Sparse`: 20 labelled nodes per class, 1000 test nodes.
//! * `Public`: sparse plus 500 validation nodes, drawn once with seed 0.
//! * `Dense`: class-agnostic 60/20/20 shuffle of all nodes.
//! * `Balanced`: 60/20/20 within each class, then pooled.
//!
//! Fractions are floored for train and validation; the remainder goes to
//! test.

use std::fmt;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::dataset::Dataset;
use crate::error::{Error, Result};

pub const SPARSE_PER_CLASS: usize = 20;
pub const SPARSE_TEST: usize = 1000;
pub const PUBLIC_VAL: usize = 500;
pub const DEFAULT_SEEDS: u64 = 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SplitKind {
    Sparse,
    Public,
    Dense,
    Balanced,
}

impl SplitKind {
    pub const ALL: [SplitKind; 4] = [
        SplitKind::Sparse,
        SplitKind::Public,
        SplitKind::Dense,
        SplitKind::Balanced,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            SplitKind::Sparse => "sparse",
            SplitKind::Public => "public",
            SplitKind::Dense => "dense",
            SplitKind::Balanced => "balanced",
        }
    }

    /// Sparse and public are single fixed splits; the fractional
    /// conventions are regenerated per seed.
    pub fn is_single(self) -> bool {
        matches!(self, SplitKind::Sparse | SplitKind::Public)
    }
}

impl fmt::Display for SplitKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.pad(self.as_str())
    }
}

impl FromStr for SplitKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "sparse" => Ok(SplitKind::Sparse),
            "public" => Ok(SplitKind::Public),
            "dense" => Ok(SplitKind::Dense),
            "balanced" => Ok(SplitKind::Balanced),
            _ => Err(Error::InvalidArgument(format!("unknown split kind {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitSet {
    pub kind: SplitKind,
    pub seed: u64,
    pub train: Vec<usize>,
    pub val: Vec<usize>,
    pub test: Vec<usize>,
}

impl SplitSet {
    fn new(
        kind: SplitKind,
        seed: u64,
        mut train: Vec<usize>,
        mut val: Vec<usize>,
        mut test: Vec<usize>,
    ) -> Self {
        train.sort_unstable();
        val.sort_unstable();
        test.sort_unstable();
        SplitSet {
            kind,
            seed,
            train,
            val,
            test,
        }
    }

    /// Checks disjointness, index range, and non-emptiness.
    pub fn validate(&self, n: usize) -> Result<()> {
        let mut seen = vec![false; n];
        for (name, part) in [
            ("train", &self.train),
            ("val", &self.val),
            ("test", &self.test),
        ] {
            for &i in part.iter() {
                if i >= n {
                    return Err(Error::OutOfRange(format!(
                        "{name} index {i} with n = {n} (seed {})",
                        self.seed
                    )));
                }
                if seen[i] {
                    return Err(Error::Split(format!(
                        "node {i} appears twice (seed {})",
                        self.seed
                    )));
                }
                seen[i] = true;
            }
        }
        if self.train.is_empty() || self.test.is_empty() {
            return Err(Error::Split("train and test must be nonempty".into()));
        }
        if self.val.is_empty() && self.kind != SplitKind::Sparse {
            return Err(Error::Split(format!(
                "{} split without validation nodes",
                self.kind
            )));
        }
        Ok(())
    }
}

fn rng_for(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// `floor(frac · size)` for the 60% / 20% shares, exact on integers.
fn share(size: usize, percent: usize) -> usize {
    size * percent / 100
}

pub fn make_sparse(ds: &Dataset, seed: u64, with_val: bool) -> Result<SplitSet> {
    let mut rng = rng_for(seed);
    let mut train = Vec::new();
    let mut rest = Vec::new();
    for (c, mut members) in ds.class_members().into_iter().enumerate() {
        if members.len() < SPARSE_PER_CLASS {
            return Err(Error::Split(format!(
                "class {c} has {} nodes, sparse split needs {SPARSE_PER_CLASS}",
                members.len()
            )));
        }
        members.shuffle(&mut rng);
        train.extend_from_slice(&members[..SPARSE_PER_CLASS]);
        rest.extend_from_slice(&members[SPARSE_PER_CLASS..]);
    }
    let needed = SPARSE_TEST + if with_val { PUBLIC_VAL } else { 0 };
    if rest.len() < needed {
        return Err(Error::Split(format!(
            "{} unlabelled nodes remain, need {needed}",
            rest.len()
        )));
    }
    rest.sort_unstable();
    rest.shuffle(&mut rng);
    let test = rest[..SPARSE_TEST].to_vec();
    let val = if with_val {
        rest[SPARSE_TEST..SPARSE_TEST + PUBLIC_VAL].to_vec()
    } else {
        Vec::new()
    };
    let kind = if with_val {
        SplitKind::Public
    } else {
        SplitKind::Sparse
    };
    Ok(SplitSet::new(kind, seed, train, val, test))
}

/// The fixed "public" split: sparse with validation, seed 0.
pub fn make_public(ds: &Dataset) -> Result<SplitSet> {
    make_sparse(ds, 0, true)
}

pub fn make_dense(ds: &Dataset, seed: u64) -> Result<SplitSet> {
    let n = ds.num_nodes();
    if n < 5 {
        return Err(Error::Split(format!("dense split needs n >= 5, got {n}")));
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut rng_for(seed));
    let (a, b) = (share(n, 60), share(n, 20));
    Ok(SplitSet::new(
        SplitKind::Dense,
        seed,
        order[..a].to_vec(),
        order[a..a + b].to_vec(),
        order[a + b..].to_vec(),
    ))
}

pub fn make_balanced(ds: &Dataset, seed: u64) -> Result<SplitSet> {
    let mut rng = rng_for(seed);
    let (mut train, mut val, mut test) = (Vec::new(), Vec::new(), Vec::new());
    for (c, mut members) in ds.class_members().into_iter().enumerate() {
        let size = members.len();
        if size < 5 {
            return Err(Error::Split(format!(
                "class {c} has {size} nodes, balanced split needs 5"
            )));
        }
        members.shuffle(&mut rng);
        let (a, b) = (share(size, 60), share(size, 20));
        train.extend_from_slice(&members[..a]);
        val.extend_from_slice(&members[a..a + b]);
        test.extend_from_slice(&members[a + b..]);
    }
    Ok(SplitSet::new(SplitKind::Balanced, seed, train, val, test))
}

pub fn make_split(ds: &Dataset, kind: SplitKind, seed: u64) -> Result<SplitSet> {
    match kind {
        SplitKind::Sparse => make_sparse(ds, seed, false),
        SplitKind::Public => make_public(ds),
        SplitKind::Dense => make_dense(ds, seed),
        SplitKind::Balanced => make_balanced(ds, seed),
    }
}

/// One split per seed. Single-split conventions ignore `seeds` and return
/// exactly one split.
pub fn generate_splits(ds: &Dataset, kind: SplitKind, seeds: &[u64]) -> Result<Vec<SplitSet>> {
    if kind.is_single() {
        return Ok(vec![make_split(ds, kind, 0)?]);
    }
    seeds.iter().map(|&s| make_split(ds, kind, s)).collect()
}

pub fn default_seeds() -> Vec<u64> {
    (0..DEFAULT_SEEDS).collect()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SeedSplit {
    pub seed: u64,
    pub train: Vec<usize>,
    pub val: Vec<usize>,
    pub test: Vec<usize>,
}

/// The JSON document holding every split of one convention for a dataset.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitFile {
    pub dataset: String,
    pub kind: SplitKind,
    pub seeds: Vec<SeedSplit>,
}

impl SplitFile {
    pub fn new(dataset: impl Into<String>, kind: SplitKind, splits: &[SplitSet]) -> Self {
        SplitFile {
            dataset: dataset.into(),
            kind,
            seeds: splits
                .iter()
                .map(|s| SeedSplit {
                    seed: s.seed,
                    train: s.train.clone(),
                    val: s.val.clone(),
                    test: s.test.clone(),
                })
                .collect(),
        }
    }

    pub fn splits(&self) -> Vec<SplitSet> {
        self.seeds
            .iter()
            .map(|s| SplitSet {
                kind: self.kind,
                seed: s.seed,
                train: s.train.clone(),
                val: s.val.clone(),
                test: s.test.clone(),
            })
            .collect()
    }

    /// Checks that the file belongs to `ds` and every index is in range.
    pub fn validate_for(&self, ds: &Dataset) -> Result<()> {
        if self.dataset != ds.name {
            return Err(Error::InvalidArgument(format!(
                "splits were generated for {:?}, not {:?}",
                self.dataset, ds.name
            )));
        }
        self.splits()
            .iter()
            .try_for_each(|s| s.validate(ds.num_nodes()))
    }
}

pub fn save_splits(path: impl AsRef<Path>, file: &SplitFile) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, serde_json::to_string(file)? + "\n").map_err(|e| Error::io(path, e))
}

pub fn load_splits(path: impl AsRef<Path>) -> Result<SplitFile> {
    let path = path.as_ref();
    if !path.exists() {
        return Err(Error::MissingFile(path.to_path_buf()));
    }
    let txt = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Ok(serde_json::from_str(&txt)?)
}

/// Loads and validates splits against a dataset.
pub fn load_splits_for(path: impl AsRef<Path>, ds: &Dataset) -> Result<Vec<SplitSet>> {
    let file = load_splits(path)?;
    file.validate_for(ds)?;
    Ok(file.splits())
}

fn read_index_file(path: &Path) -> Result<Vec<usize>> {
    if !path.exists() {
        return Err(Error::MissingFile(path.to_path_buf()));
    }
    let txt = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    txt.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            l.trim().parse().map_err(|_| Error::Parse {
                file: path.display().to_string(),
                line: i + 1,
                msg: format!("bad index {l:?}"),
            })
        })
        .collect()
}

/// Reads externally supplied masks (one node index per line) for exact
/// reproduction of published splits.
pub fn load_mask_files(
    ds: &Dataset,
    kind: SplitKind,
    train: impl AsRef<Path>,
    val: impl AsRef<Path>,
    test: impl AsRef<Path>,
) -> Result<SplitSet> {
    let split = SplitSet::new(
        kind,
        0,
        read_index_file(train.as_ref())?,
        read_index_file(val.as_ref())?,
        read_index_file(test.as_ref())?,
    );
    split.validate(ds.num_nodes())?;
    Ok(split)
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::DMatrix;

    fn with_classes(sizes: &[usize]) -> Dataset {
        let labels: Vec<usize> = sizes
            .iter()
            .enumerate()
            .flat_map(|(c, &s)| std::iter::repeat_n(c, s))
            .collect();
        let n = labels.len();
        Dataset::new(
            "synthetic",
            sizes.len(),
            false,
            DMatrix::zeros(n, 1),
            labels,
            vec![],
        )
        .unwrap()
    }

    #[test]
    fn sparse_counts() {
        let ds = with_classes(&[300, 400, 500, 350, 420, 380, 358]);
        let s = make_sparse(&ds, 3, true).unwrap();
        assert_eq!((s.train.len(), s.val.len(), s.test.len()), (140, 500, 1000));
        s.validate(ds.num_nodes()).unwrap();
        let s = make_sparse(&ds, 3, false).unwrap();
        assert_eq!((s.train.len(), s.val.len(), s.test.len()), (140, 0, 1000));
        s.validate(ds.num_nodes()).unwrap();
        for members in ds.class_members() {
            assert_eq!(members.iter().filter(|i| s.train.contains(i)).count(), 20);
        }
    }

    #[test]
    fn sparse_label_rate_on_pubmed_sized_graph() {
        let ds = with_classes(&[4103, 7739, 7875]);
        let s = make_sparse(&ds, 0, false).unwrap();
        let rate = s.train.len() as f64 / ds.num_nodes() as f64;
        assert_eq!(s.train.len(), 60);
        assert!((rate - 0.003).abs() < 0.0005);
    }

    #[test]
    fn sparse_rejects_small_class() {
        let ds = with_classes(&[600, 10, 600]);
        assert!(matches!(make_sparse(&ds, 0, false), Err(Error::Split(_))));
    }

    #[test]
    fn dense_counts() {
        let ds = with_classes(&[1000]);
        let s = make_dense(&ds, 0).unwrap();
        assert_eq!((s.train.len(), s.val.len(), s.test.len()), (600, 200, 200));
        let ds = with_classes(&[4, 6]);
        let a = make_dense(&ds, 0).unwrap();
        let b = make_dense(&ds, 1).unwrap();
        assert_eq!((a.train.len(), a.val.len(), a.test.len()), (6, 2, 2));
        assert_eq!((b.train.len(), b.val.len(), b.test.len()), (6, 2, 2));
        assert_ne!(a, b);
        assert!(make_dense(&with_classes(&[4]), 0).is_err());
    }

    #[test]
    fn balanced_counts() {
        let s = make_balanced(&with_classes(&[100]), 0).unwrap();
        assert_eq!((s.train.len(), s.val.len(), s.test.len()), (60, 20, 20));
        let s = make_balanced(&with_classes(&[5]), 0).unwrap();
        assert_eq!((s.train.len(), s.val.len(), s.test.len()), (3, 1, 1));
        assert!(make_balanced(&with_classes(&[10, 4]), 0).is_err());
    }

    #[test]
    fn balanced_train_follows_class_proportions() {
        let sizes = [37, 120, 8, 55];
        let ds = with_classes(&sizes);
        let s = make_balanced(&ds, 7).unwrap();
        for (c, &size) in sizes.iter().enumerate() {
            let got = s.train.iter().filter(|&&i| ds.labels[i] == c).count();
            assert_eq!(got, size * 6 / 10);
        }
    }

    #[test]
    fn seeds_determine_splits() {
        let ds = with_classes(&[30, 40]);
        assert_eq!(
            make_balanced(&ds, 4).unwrap(),
            make_balanced(&ds, 4).unwrap()
        );
        let all = generate_splits(&ds, SplitKind::Balanced, &default_seeds()).unwrap();
        assert_eq!(all.len(), 10);
    }

    #[test]
    fn json_round_trip_and_validation() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("splits.json");
        let big = with_classes(&[30, 40]);
        let splits = generate_splits(&big, SplitKind::Dense, &default_seeds()).unwrap();
        let file = SplitFile::new(&big.name, SplitKind::Dense, &splits);
        save_splits(&path, &file).unwrap();
        assert_eq!(load_splits(&path).unwrap(), file);
        assert_eq!(load_splits_for(&path, &big).unwrap(), splits);

        let mut small = with_classes(&[10, 10]);
        assert!(load_splits_for(&path, &small).is_err());
        small.name = big.name.clone();
        assert!(matches!(
            load_splits_for(&path, &small),
            Err(Error::OutOfRange(_))
        ));

        std::fs::write(&path, "{\"dataset\": 3}").unwrap();
        assert!(load_splits(&path).is_err());
    }

    #[test]
    fn mask_files() {
        let dir = tempfile::tempdir().unwrap();
        let ds = with_classes(&[5, 5]);
        std::fs::write(dir.path().join("train"), "0\n5\n").unwrap();
        std::fs::write(dir.path().join("val"), "1\n").unwrap();
        std::fs::write(dir.path().join("test"), "2\n6\n7\n").unwrap();
        let s = load_mask_files(
            &ds,
            SplitKind::Public,
            dir.path().join("train"),
            dir.path().join("val"),
            dir.path().join("test"),
        )
        .unwrap();
        assert_eq!(s.test, vec![2, 6, 7]);
        std::fs::write(dir.path().join("test"), "2\n0\n").unwrap();
        assert!(load_mask_files(
            &ds,
            SplitKind::Public,
            dir.path().join("train"),
            dir.path().join("val"),
            dir.path().join("test"),
        )
        .is_err());
    }
}
