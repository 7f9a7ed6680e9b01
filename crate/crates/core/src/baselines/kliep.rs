//! Kullback-Leibler importance estimation (KLIEP), reconstructed from its
//! published formulation.
//!
//! The weight function is a Gaussian-kernel expansion over centers drawn
//! from the target sample. Coefficients maximize the mean log weight of the
//! target points subject to nonnegativity and the source-side normalization
//! `(1/N_ς)·Σ_i ŵ(x_i) = 1`. The problem is convex; we solve it with
//! projected gradient ascent plus Armijo backtracking, re-imposing the
//! normalization after every step. Bandwidth is chosen by likelihood
//! cross-validation on the target sample.

use nalgebra::{DMatrix, DVector};
use rand::seq::SliceRandom;

use crate::baselines::cv::{CvCandidate, CvCriterion, CvReport};
use crate::baselines::kernel::{default_sigma_grid, gaussian_gram, median_heuristic, KernelModel};
use crate::data::Dataset;
use crate::error::{Error, EstimatorError, EstimatorFailure, Result};
use crate::seeding::rng_from;
use crate::weights::{Normalization, WeightVector};

#[derive(Debug, Clone)]
pub struct KliepOptions {
    /// Bandwidth candidates; `None` derives a grid from the median
    /// heuristic.
    pub sigma_grid: Option<Vec<f64>>,
    /// Maximum number of kernel centers (capped at the target size).
    pub b_max: usize,
    /// Likelihood cross-validation folds over the target sample.
    pub folds: usize,
    pub max_iterations: usize,
    /// Convergence threshold on the relative objective change.
    pub tolerance: f64,
    pub seed: u64,
}

impl Default for KliepOptions {
    fn default() -> Self {
        Self {
            sigma_grid: None,
            b_max: 100,
            folds: 5,
            max_iterations: 500,
            tolerance: 1e-7,
            seed: 0,
        }
    }
}

/// A successful KLIEP fit.
#[derive(Debug, Clone)]
pub struct KliepFit {
    pub model: KernelModel,
    pub report: CvReport,
    /// Fitted weights at the source rows.
    pub weights: WeightVector,
    /// `|mean source weight − 1|` after the final normalization.
    pub constraint_residual: f64,
    /// Objective value at every accepted optimizer iteration
    /// (nondecreasing by construction).
    pub objective_trace: Vec<f64>,
}

struct InnerFit {
    alpha: DVector<f64>,
    trace: Vec<f64>,
    residual: f64,
}

/// Mean log weight of the rows of `gram · alpha`; −∞ when any weight is
/// nonpositive.
fn objective(gram: &DMatrix<f64>, alpha: &DVector<f64>) -> f64 {
    let w = gram * alpha;
    let mut acc = 0.0;
    for v in w.iter() {
        if *v <= 0.0 {
            return f64::NEG_INFINITY;
        }
        acc += v.ln();
    }
    acc / w.len() as f64
}

/// Clips negatives and rescales so `normalizer · alpha = 1`. Fails when the
/// clipped vector has no mass on the constraint.
fn project(alpha: &DVector<f64>, normalizer: &DVector<f64>) -> Option<DVector<f64>> {
    let clipped = alpha.map(|v| v.max(0.0));
    let mass = normalizer.dot(&clipped);
    if mass <= 0.0 || !mass.is_finite() {
        return None;
    }
    Some(clipped / mass)
}

/// Fits alpha for one bandwidth on `target_gram` (rows = fitting targets).
fn fit_alpha(
    target_gram: &DMatrix<f64>,
    normalizer: &DVector<f64>,
    options: &KliepOptions,
) -> Option<InnerFit> {
    let b = target_gram.ncols();
    let alpha0 = project(&DVector::from_element(b, 1.0), normalizer)?;
    let mut alpha = alpha0;
    let mut best = objective(target_gram, &alpha);
    if !best.is_finite() {
        return None;
    }
    let mut trace = vec![best];
    let mut step = 1.0;
    for _ in 0..options.max_iterations {
        let weights = target_gram * &alpha;
        let inv = weights.map(|v| 1.0 / v);
        let grad = target_gram.transpose() * inv / weights.len() as f64;

        let mut accepted = false;
        let mut t = step;
        for _ in 0..40 {
            if let Some(candidate) = project(&(&alpha + t * &grad), normalizer) {
                let value = objective(target_gram, &candidate);
                // Armijo condition along the projected direction
                let gain = grad.dot(&(&candidate - &alpha));
                if value.is_finite() && value >= best + 1e-4 * gain.max(0.0) && value > best {
                    alpha = candidate;
                    let done = (value - best).abs() <= options.tolerance * (best.abs() + 1.0);
                    best = value;
                    trace.push(value);
                    accepted = true;
                    step = t * 2.0;
                    if done {
                        return Some(finish(alpha, trace, normalizer));
                    }
                    break;
                }
            }
            t /= 2.0;
        }
        if !accepted {
            break;
        }
    }
    Some(finish(alpha, trace, normalizer))
}

fn finish(alpha: DVector<f64>, trace: Vec<f64>, normalizer: &DVector<f64>) -> InnerFit {
    let residual = (normalizer.dot(&alpha) - 1.0).abs();
    InnerFit {
        alpha,
        trace,
        residual,
    }
}

/// Fits KLIEP on a source/target pair.
///
/// Failure is a typed result (`EstimatorFailure`), never a panic: the
/// optimization is occasionally ill behaved and the benchmark records
/// those cells as dashes.
pub fn kliep_fit(
    source: &Dataset,
    target: &Dataset,
    options: &KliepOptions,
) -> std::result::Result<KliepFit, EstimatorError> {
    validate_pair(source, target)?;
    let mut rng = rng_from(options.seed);

    let mut permutation: Vec<usize> = (0..target.n_samples()).collect();
    permutation.shuffle(&mut rng);
    let b = options.b_max.min(target.n_samples()).max(1);
    let centers = target.select_rows(&permutation[..b]).features().clone();

    let sigma_grid = match &options.sigma_grid {
        Some(grid) => grid.clone(),
        None => default_sigma_grid(median_heuristic(target)),
    };
    if sigma_grid.iter().any(|&s| !(s > 0.0)) {
        return Err(EstimatorError::Invalid(Error::InvalidArgument(
            "sigma grid entries must be positive".into(),
        )));
    }

    let folds = options.folds.min(target.n_samples()).max(1);
    let mut candidates = Vec::with_capacity(sigma_grid.len());
    let mut scores = Vec::with_capacity(sigma_grid.len());
    for &sigma in &sigma_grid {
        candidates.push(CvCandidate {
            sigma,
            lambda: None,
        });
        let source_gram = gaussian_gram(source.features(), &centers, sigma);
        let normalizer =
            source_gram.row_sum().transpose() / source.n_samples() as f64;
        let target_gram = gaussian_gram(target.features(), &centers, sigma);

        if folds < 2 {
            // too little target data for held-out scoring; use the fitted
            // objective itself
            let score = fit_alpha(&target_gram, &normalizer, options)
                .map(|fit| objective(&target_gram, &fit.alpha))
                .unwrap_or(f64::NEG_INFINITY);
            scores.push(score);
            continue;
        }

        let mut fold_scores = Vec::with_capacity(folds);
        for fold in 0..folds {
            let hold: Vec<usize> = permutation
                .iter()
                .enumerate()
                .filter(|(pos, _)| pos % folds == fold)
                .map(|(_, &row)| row)
                .collect();
            let keep: Vec<usize> = permutation
                .iter()
                .enumerate()
                .filter(|(pos, _)| pos % folds != fold)
                .map(|(_, &row)| row)
                .collect();
            if hold.is_empty() || keep.is_empty() {
                continue;
            }
            let fit_gram = target_gram.select_rows(keep.iter());
            let hold_gram = target_gram.select_rows(hold.iter());
            let score = fit_alpha(&fit_gram, &normalizer, options)
                .map(|fit| objective(&hold_gram, &fit.alpha))
                .unwrap_or(f64::NEG_INFINITY);
            fold_scores.push(score);
        }
        let score = if fold_scores.is_empty() {
            f64::NEG_INFINITY
        } else {
            fold_scores.iter().sum::<f64>() / fold_scores.len() as f64
        };
        scores.push(score);
    }

    let report = CvReport::select(candidates, scores, CvCriterion::Maximize)
        .ok_or(EstimatorError::Failure(EstimatorFailure::IllBehavedOptimization))?;
    let sigma = report.chosen().sigma;

    let source_gram = gaussian_gram(source.features(), &centers, sigma);
    let normalizer = source_gram.row_sum().transpose() / source.n_samples() as f64;
    let target_gram = gaussian_gram(target.features(), &centers, sigma);
    let fit = fit_alpha(&target_gram, &normalizer, options)
        .ok_or(EstimatorError::Failure(EstimatorFailure::IllBehavedOptimization))?;

    if !fit.trace.iter().all(|v| v.is_finite()) {
        return Err(EstimatorError::Failure(EstimatorFailure::IllBehavedOptimization));
    }
    if fit.residual > 1e-3 {
        return Err(EstimatorError::Failure(EstimatorFailure::ConstraintViolation {
            residual: fit.residual,
            iterations: options.max_iterations,
        }));
    }

    let weight_values: Vec<f64> = (&source_gram * &fit.alpha).iter().copied().collect();
    let weights = WeightVector::new(weight_values, Normalization::RawCounts)
        .map_err(EstimatorError::Invalid)?;

    Ok(KliepFit {
        model: KernelModel::new(centers, sigma, fit.alpha),
        report,
        weights,
        constraint_residual: fit.residual,
        objective_trace: fit.trace,
    })
}

fn validate_pair(source: &Dataset, target: &Dataset) -> Result<(), EstimatorError> {
    if source.dim() != target.dim() {
        return Err(EstimatorError::Invalid(Error::DimensionMismatch {
            expected: source.dim(),
            got: target.dim(),
        }));
    }
    if source.n_samples() < 2 || target.n_samples() < 2 {
        return Err(EstimatorError::Invalid(Error::InvalidArgument(
            "kernel estimators need at least 2 source and 2 target samples".into(),
        )));
    }
    Ok(())
}
