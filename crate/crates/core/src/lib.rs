//! Spectral-filter graph models for semi-supervised node classification.
//!
//! The propagation operator of a one-layer linear GNN is built from the
//! spectral system of a graph matrix, reshaped by a kernel over the spectral
//! values and optionally truncated to its leading components:
//!
//! ```text
//! logits = (U diag(K α) Vᵀ + β I) X W
//! ```
//!
//! Modules, bottom-up:
//!
//! - [`dataset`]: on-disk datasets and a stochastic-block-model generator
//! - [`representation`]: adjacency / Laplacian matrices and their normalizations
//! - [`spectral`]: ordered eigen/singular systems, truncation, cache files
//! - [`filter`]: kernels, kernel matrices, propagation operators
//! - [`model`]: forward maps and analytic gradients for the five predictors
//! - [`training`]: cross-entropy, Adam, training loop, accuracy
//! - [`splits`]: sparse / public / dense / balanced split conventions
//! - [`harness`]: validation grids, ablations, split audits, reports

pub mod dataset;
pub mod error;
pub mod filter;
pub mod harness;
pub mod model;
pub mod representation;
pub mod spectral;
pub mod splits;
pub mod training;

pub use dataset::{generate_sbm, load_dataset, write_dataset, Dataset, FeatureMode, SbmConfig};
pub use error::{Error, Result};
pub use filter::{KernelKind, KernelMatrix, KernelSpec};
pub use model::{ForwardContext, ModelKind, ModelParams, Propagation};
pub use representation::{build_representation, GraphMatrix, ReprKind};
pub use spectral::{decompose, SpectralSystem};
pub use splits::{SplitKind, SplitSet};
pub use training::{RunResult, TrainConfig};
