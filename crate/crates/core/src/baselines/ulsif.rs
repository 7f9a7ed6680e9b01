//! Unconstrained least-squares importance fitting (uLSIF), reconstructed
//! from its published formulation.
//!
//! The squared-error fit of a kernel-expansion ratio model has the closed
//! form `α = (H + λI)⁻¹ h` with `H` the source-side second-moment matrix of
//! the kernel features and `h` their target-side mean. Negative (and
//! numerically vanishing, below 1e-12) evaluated weights are set to zero;
//! when that leaves fewer strictly positive weights than the caller's
//! floor, a starvation warning is attached to the result.

use nalgebra::{Cholesky, DMatrix, DVector};
use rand::seq::SliceRandom;

use crate::baselines::cv::{CvCandidate, CvCriterion, CvReport};
use crate::baselines::kernel::{
    default_lambda_grid, default_sigma_grid, gaussian_gram, median_heuristic, KernelModel,
};
use crate::data::Dataset;
use crate::error::{Error, EstimatorError, EstimatorFailure};
use crate::seeding::rng_from;
use crate::weights::{Normalization, WeightVector};

/// Evaluated weights at or below this value are treated as exactly zero,
/// so the ridge limit `λ → ∞` degenerates to all-zero weights instead of
/// denormal noise.
pub const WEIGHT_ZERO_EPS: f64 = 1e-12;

#[derive(Debug, Clone)]
pub struct UlsifOptions {
    /// Bandwidth candidates; `None` derives a grid from the median heuristic.
    pub sigma_grid: Option<Vec<f64>>,
    /// Ridge candidates; `None` uses {1e-3, 1e-2, 1e-1, 1, 10}.
    pub lambda_grid: Option<Vec<f64>>,
    /// Maximum number of kernel centers (capped at the target size).
    pub b_max: usize,
    /// Folds for the squared-error cross-validation.
    pub folds: usize,
    /// Starvation floor: a result with fewer strictly positive weights
    /// carries a warning. Zero disables the check.
    pub positive_floor: usize,
    pub seed: u64,
}

impl Default for UlsifOptions {
    fn default() -> Self {
        Self {
            sigma_grid: None,
            lambda_grid: None,
            b_max: 100,
            folds: 5,
            positive_floor: 0,
            seed: 0,
        }
    }
}

/// Attached to a fit whose clipped weights fall below the caller's floor.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StarvationWarning {
    pub positive_count: usize,
    pub floor: usize,
}

/// A successful uLSIF fit.
#[derive(Debug, Clone)]
pub struct UlsifFit {
    /// Kernel model with the clipped (nonnegative) coefficients.
    pub model: KernelModel,
    pub report: CvReport,
    /// Clipped weights at the source rows.
    pub weights: WeightVector,
    /// Unclipped solution of the linear system.
    pub alpha_raw: DVector<f64>,
    /// Relative residual `‖(H+λI)·α_raw − h‖ / ‖h‖` of the accepted solve.
    pub residual: f64,
    pub starvation: Option<StarvationWarning>,
}

/// Closed-form coefficient solve from precomputed kernel features.
///
/// `source_gram` is N_ς×b, `target_gram` is N_τ×b; both must come from the
/// same centers and bandwidth. Returns the raw coefficient vector and the
/// relative residual, or `None` when the solve is non-finite.
pub fn ulsif_solve(
    source_gram: &DMatrix<f64>,
    target_gram: &DMatrix<f64>,
    lambda: f64,
) -> Option<(DVector<f64>, f64)> {
    let b = source_gram.ncols();
    let n_source = source_gram.nrows() as f64;
    let n_target = target_gram.nrows() as f64;
    let mut system = source_gram.transpose() * source_gram / n_source;
    for i in 0..b {
        system[(i, i)] += lambda;
    }
    let h = target_gram.row_sum().transpose() / n_target;

    let alpha = match Cholesky::new(system.clone()) {
        Some(chol) => chol.solve(&h),
        None => system.clone().lu().solve(&h)?,
    };
    if alpha.iter().any(|v| !v.is_finite()) {
        return None;
    }
    let residual_vec = &system * &alpha - &h;
    let h_norm = h.norm();
    let residual = if h_norm > 0.0 {
        residual_vec.norm() / h_norm
    } else {
        residual_vec.norm()
    };
    Some((alpha, residual))
}

fn cv_score(
    source_gram: &DMatrix<f64>,
    target_gram: &DMatrix<f64>,
    lambda: f64,
    source_perm: &[usize],
    target_perm: &[usize],
    folds: usize,
) -> f64 {
    let mut scores = Vec::with_capacity(folds);
    for fold in 0..folds {
        let split = |perm: &[usize]| -> (Vec<usize>, Vec<usize>) {
            let mut keep = Vec::new();
            let mut hold = Vec::new();
            for (pos, &row) in perm.iter().enumerate() {
                if pos % folds == fold {
                    hold.push(row);
                } else {
                    keep.push(row);
                }
            }
            (keep, hold)
        };
        let (s_keep, s_hold) = split(source_perm);
        let (t_keep, t_hold) = split(target_perm);
        if s_keep.is_empty() || s_hold.is_empty() || t_keep.is_empty() || t_hold.is_empty() {
            continue;
        }
        let ks_train = source_gram.select_rows(s_keep.iter());
        let kt_train = target_gram.select_rows(t_keep.iter());
        let Some((alpha, _)) = ulsif_solve(&ks_train, &kt_train, lambda) else {
            return f64::INFINITY;
        };
        // held-out squared-error criterion: ½ αᵀH α − hᵀα
        let ks_test = source_gram.select_rows(s_hold.iter());
        let kt_test = target_gram.select_rows(t_hold.iter());
        let h_test = kt_test.row_sum().transpose() / t_hold.len() as f64;
        let projected = &ks_test * &alpha;
        let quad = projected.norm_squared() / s_hold.len() as f64;
        scores.push(0.5 * quad - h_test.dot(&alpha));
    }
    if scores.is_empty() {
        f64::INFINITY
    } else {
        scores.iter().sum::<f64>() / scores.len() as f64
    }
}

/// Fits uLSIF on a source/target pair. Model selection is k-fold
/// cross-validation of the squared-error criterion over (σ, λ).
pub fn ulsif_fit(
    source: &Dataset,
    target: &Dataset,
    options: &UlsifOptions,
) -> std::result::Result<UlsifFit, EstimatorError> {
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
    let mut rng = rng_from(options.seed);

    let mut target_perm: Vec<usize> = (0..target.n_samples()).collect();
    target_perm.shuffle(&mut rng);
    let b = options.b_max.min(target.n_samples()).max(1);
    let centers = target.select_rows(&target_perm[..b]).features().clone();

    let mut source_perm: Vec<usize> = (0..source.n_samples()).collect();
    source_perm.shuffle(&mut rng);

    let sigma_grid = match &options.sigma_grid {
        Some(grid) => grid.clone(),
        None => default_sigma_grid(median_heuristic(target)),
    };
    let lambda_grid = match &options.lambda_grid {
        Some(grid) => grid.clone(),
        None => default_lambda_grid(),
    };
    if sigma_grid.iter().any(|&s| !(s > 0.0)) || lambda_grid.iter().any(|&l| !(l > 0.0)) {
        return Err(EstimatorError::Invalid(Error::InvalidArgument(
            "sigma and lambda grid entries must be positive".into(),
        )));
    }

    let folds = options
        .folds
        .min(source.n_samples())
        .min(target.n_samples())
        .max(2);

    let mut candidates = Vec::new();
    let mut scores = Vec::new();
    for &sigma in &sigma_grid {
        let source_gram = gaussian_gram(source.features(), &centers, sigma);
        let target_gram = gaussian_gram(target.features(), &centers, sigma);
        for &lambda in &lambda_grid {
            candidates.push(CvCandidate {
                sigma,
                lambda: Some(lambda),
            });
            scores.push(cv_score(
                &source_gram,
                &target_gram,
                lambda,
                &source_perm,
                &target_perm,
                folds,
            ));
        }
    }

    let report = CvReport::select(candidates, scores, CvCriterion::Minimize)
        .ok_or(EstimatorError::Failure(EstimatorFailure::SolveFailed))?;
    let chosen = report.chosen();
    let sigma = chosen.sigma;
    let lambda = chosen.lambda.expect("ulsif candidates carry lambda");

    let source_gram = gaussian_gram(source.features(), &centers, sigma);
    let target_gram = gaussian_gram(target.features(), &centers, sigma);
    let (alpha_raw, residual) = ulsif_solve(&source_gram, &target_gram, lambda)
        .ok_or(EstimatorError::Failure(EstimatorFailure::SolveFailed))?;

    let alpha_clipped = alpha_raw.map(|v| v.max(0.0));
    let weight_values: Vec<f64> = (&source_gram * &alpha_clipped)
        .iter()
        .map(|&w| if w > WEIGHT_ZERO_EPS { w } else { 0.0 })
        .collect();
    let weights = WeightVector::new(weight_values, Normalization::RawCounts)
        .map_err(EstimatorError::Invalid)?;

    let starvation = if options.positive_floor > 0
        && weights.positive_count() < options.positive_floor
    {
        Some(StarvationWarning {
            positive_count: weights.positive_count(),
            floor: options.positive_floor,
        })
    } else {
        None
    };

    Ok(UlsifFit {
        model: KernelModel::new(centers, sigma, alpha_clipped),
        report,
        weights,
        alpha_raw,
        residual,
        starvation,
    })
}
