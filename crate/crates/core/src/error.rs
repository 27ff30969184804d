use std::path::PathBuf;

/// Errors raised across the estimation pipeline.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid rank {rank} for dimension {n}")]
    InvalidRank { rank: usize, n: usize },
    #[error("incoherence target {mu} outside [1, {max}]")]
    InvalidMu { mu: f64, max: f64 },
    #[error("invalid support size {m} for dimension {n}")]
    InvalidSupportSize { m: usize, n: usize },
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("matrix is not symmetric (max |A - A^T| = {deviation:e})")]
    NotSymmetric { deviation: f64 },
    #[error("matrix contains non-finite entries")]
    NonFinite,
    #[error("invalid noise specification: {0}")]
    InvalidNoise(String),
    #[error("unknown noise family `{0}`")]
    UnknownNoiseFamily(String),
    #[error("{0}")]
    InvalidArgument(String),
    #[error("no node passes the coherence screen (threshold {threshold:e})")]
    EmptyKeepSet { threshold: f64 },
    #[error("noise-scale index set has {size} rows; need at least 2")]
    EmptyScreenSet { size: usize },
    #[error("eigensolver failed: {0}")]
    EigenFailure(String),
    #[error("leading eigenvalue {index} is complex ({re} + {im}i)")]
    ComplexLeadingEigenvalue { index: usize, re: f64, im: f64 },
    #[error("left/right eigenvector inner product {0:e} is degenerate")]
    DegenerateInnerProduct(f64),
    #[error("correction matrix is singular (condition number {0:e})")]
    SingularG(f64),
    #[error("symmetrized correction matrix has non-positive eigenvalue {0:e}")]
    NegativeSpectrum(f64),
    #[error("cost mode `{mode}` cannot take {got} residual matrices")]
    ModeArity { mode: &'static str, got: usize },
    #[error("truncated cost requires a positive threshold")]
    MissingTau,
    #[error("exhaustive search over {n} nodes exceeds the limit of {limit}")]
    TooLarge { n: usize, limit: usize },
    #[error("true support is empty")]
    EmptyTruth,
    #[error("need at least 2 samples, got {0}")]
    TooFewSamples(usize),
    #[error("{}:{line}: {message}", path.display())]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },
    #[error("config: {0}")]
    Config(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
