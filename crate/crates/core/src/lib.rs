//! Importance-weight estimation for covariate-shift adaptation.
//!
//! When training data come from a source distribution and deployment data
//! from a shifted target distribution (same conditional label law,
//! different input marginals), reweighting the source sample by the density
//! ratio `p_τ(x)/p_ς(x)` makes the weighted empirical loss an unbiased
//! stand-in for the target loss. This crate provides:
//!
//! - **Nearest-neighbor weighting** (`nnw`): the weight of each source
//!   point is the number of target points falling in its Voronoi cell,
//!   computed via exact 1-NN queries; with optional Laplace smoothing
//!   (one extra count per cell).
//! - **Baselines** (`baselines`): Parzen-window density ratio, KLIEP, and
//!   uLSIF, with their cross-validation routines.
//! - **Weighted discriminants** (`classify`): sample-weighted LDA and QDA
//!   with typed failures for singular estimates.
//! - **Benchmark harness** (`experiment`, `report`): the repeated-split
//!   covariate-shift protocol (PCA, quadrant-biased source sampling, R
//!   repetitions), with significance-marked tables, and a synthetic-shift
//!   oracle (`synth`) that scores estimators against the analytic ratio.
//!
//! The `parallel` feature (on by default) runs 1-NN tallies and benchmark
//! repetitions on a rayon pool; results are identical to the sequential
//! build.

pub mod baselines;
pub mod classify;
pub mod data;
pub mod error;
pub mod estimator;
pub mod experiment;
pub mod nnw;
pub mod report;
pub mod seeding;
pub mod synth;
pub mod weights;

pub use baselines::{
    kliep_fit, parzen_ratio, ulsif_fit, BandwidthRule, CvReport, KernelModel, KliepFit,
    KliepOptions, StarvationWarning, UlsifFit, UlsifOptions,
};
pub use classify::{fit_weighted, DiscriminantKind, FittedDiscriminant};
pub use data::{
    bias_sample, fit_pca, load_csv, make_splits, make_splits_full, project, standardize, Dataset,
    PcaModel, SplitSpec, TrainMode,
};
pub use error::{ClassifyError, Error, EstimatorError, EstimatorFailure, FitFailure, Result};
pub use estimator::{estimate_weights, Estimator, EstimatorOptions, ALL_ESTIMATORS};
pub use experiment::{
    load_dataset, oracle_validate, run_experiment, run_experiment_on, DatasetSpec,
    ExperimentConfig, OracleOutcome, RunOutcome,
};
pub use nnw::{build_index, nnew_plus_one, nnew_weights, Acceleration, NeighborIndex};
pub use report::{mark_significance, CellResult, ExperimentReport, Flag, ReportRow};
pub use synth::{GaussianDensity, SyntheticShift};
pub use weights::{normalize_mean_one, Normalization, WeightVector};
