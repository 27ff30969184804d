//! Estimation of a shared low-rank matrix and node-sparse perturbations from
//! groups of symmetric networks.
// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod harness;
pub mod linalg;
pub mod model;
pub mod refine;
pub mod spectral;
pub mod support;

pub use error::{Error, Result};
pub use linalg::Matrix;
pub use harness::{ExperimentConfig, ExperimentResult};
pub use model::{GroundTruth, NoiseFamily, NoiseSpec, ObservationSet, SymmetricMatrix};
pub use refine::{AsymmetricComposite, CorrectionFactor, Estimator};
pub use spectral::{RankRDecomposition, Residual, ScreeningResult};
pub use support::{CostMatrix, CostMode, SdpSolution, SupportEstimate, SupportMethod};
