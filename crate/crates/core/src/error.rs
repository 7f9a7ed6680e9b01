use std::path::PathBuf;
use thiserror::Error;

/// Hard errors: bad inputs, unreadable files, dimension mismatches.
///
/// These abort the operation that raised them. Method failures that the
/// benchmark tabulates as dashes are *not* represented here; see
/// [`EstimatorFailure`] and [`FitFailure`].
#[derive(Debug, Error)]
pub enum Error {
    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("{path}: file contains no data rows")]
    EmptyFile { path: PathBuf },

    #[error("{path}: row {row}, column `{column}`: cannot parse `{value}` as a number")]
    Parse {
        path: PathBuf,
        row: usize,
        column: String,
        value: String,
    },

    #[error("{path}: row {row}, column `{column}`: non-finite value {value}")]
    NonFinite {
        path: PathBuf,
        row: usize,
        column: String,
        value: f64,
    },

    #[error("{path}: no column named `{column}`")]
    MissingColumn { path: PathBuf, column: String },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("dataset `{name}` is invalid: {reason}")]
    InvalidDataset { name: String, reason: String },

    #[error("dataset has zero total variance (all rows identical)")]
    ZeroVariance,

    #[error("bias sampling needs at least 2 feature dimensions, got {dim}")]
    BiasNeedsTwoDims { dim: usize },

    #[error("bias sampling emptied class {class}; reseed and retry")]
    BiasEmptiedClass { class: usize },

    #[error("bias sampling removed every row; reseed and retry")]
    BiasRemovedAllRows,

    #[error("class {class} has {have} instances, `minimal` mode needs {need}")]
    ClassTooSmall {
        class: usize,
        have: usize,
        need: usize,
    },

    #[error("operation requires labels but dataset `{name}` has none")]
    MissingLabels { name: String },

    #[error("weight vector sums to zero; cannot normalize")]
    AllZeroWeights,

    #[error("weight vector length {got} does not match {expected} samples")]
    WeightLengthMismatch { expected: usize, got: usize },

    #[error("empty test set")]
    EmptyTestSet,

    #[error("non-finite value in prediction input")]
    NonFiniteInput,

    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

/// Typed weight-estimator failures.
///
/// A failed estimator is data for the benchmark (it becomes a dash in the
/// report), never a process abort.
#[derive(Debug, Clone, Error)]
pub enum EstimatorFailure {
    #[error("optimizer produced no finite objective (all candidate bandwidths degenerate)")]
    IllBehavedOptimization,

    #[error("constraint residual {residual:.3e} exceeds 1e-3 after {iterations} iterations")]
    ConstraintViolation { residual: f64, iterations: usize },

    #[error("linear solve produced non-finite coefficients")]
    SolveFailed,

    #[error("all weights are zero after clipping")]
    AllWeightsZero,
}

/// Typed classifier-fit failures: the weighted moment estimates do not
/// define a proper discriminant. Tabulated as dashes.
#[derive(Debug, Clone, Error)]
pub enum FitFailure {
    #[error("class {class} has zero total weight")]
    ZeroClassWeight { class: usize },

    #[error("covariance for {scope} is singular or not positive definite")]
    SingularCovariance { scope: String },
}

/// Estimator entry points distinguish caller bugs from tabulated failures.
#[derive(Debug, Error)]
pub enum EstimatorError {
    #[error(transparent)]
    Invalid(#[from] Error),
    #[error(transparent)]
    Failure(#[from] EstimatorFailure),
}

/// Classifier entry points distinguish caller bugs from tabulated failures.
#[derive(Debug, Error)]
pub enum ClassifyError {
    #[error(transparent)]
    Invalid(#[from] Error),
    #[error(transparent)]
    Failure(#[from] FitFailure),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
