//! Sample-weighted linear and quadratic discriminant analysis.
//!
//! Weights fold into the class priors, means, and covariance estimates;
//! prediction is the plug-in Bayes rule on the weighted moments. No
//! regularization is ever added: a singular covariance is reported as a
//! typed failure, which the benchmark tabulates as a dash.

use nalgebra::{Cholesky, DMatrix, DVector};
use serde::Serialize;

use crate::data::Dataset;
use crate::error::{ClassifyError, Error, FitFailure, Result};
use crate::weights::WeightVector;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum DiscriminantKind {
    Lda,
    Qda,
}

impl DiscriminantKind {
    pub fn name(self) -> &'static str {
        match self {
            DiscriminantKind::Lda => "lda",
            DiscriminantKind::Qda => "qda",
        }
    }
}

impl std::str::FromStr for DiscriminantKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "lda" => Ok(DiscriminantKind::Lda),
            "qda" => Ok(DiscriminantKind::Qda),
            other => Err(Error::InvalidArgument(format!(
                "unknown classifier `{other}` (expected lda|qda)"
            ))),
        }
    }
}

/// A covariance with its Cholesky-derived inverse and log-determinant.
#[derive(Debug, Clone)]
struct CovarianceTerm {
    matrix: DMatrix<f64>,
    inverse: DMatrix<f64>,
    log_det: f64,
}

impl CovarianceTerm {
    /// Fails when the matrix is not positive definite (Cholesky with no
    /// jitter; genuine failures must surface).
    fn factor(matrix: DMatrix<f64>, scope: &str) -> std::result::Result<Self, FitFailure> {
        let chol = Cholesky::new(matrix.clone()).ok_or_else(|| FitFailure::SingularCovariance {
            scope: scope.to_owned(),
        })?;
        let log_det = 2.0 * chol.l().diagonal().iter().map(|v| v.ln()).sum::<f64>();
        if !log_det.is_finite() {
            return Err(FitFailure::SingularCovariance {
                scope: scope.to_owned(),
            });
        }
        Ok(Self {
            inverse: chol.inverse(),
            matrix,
            log_det,
        })
    }
}

/// Weighted LDA/QDA parameters: priors on the simplex, per-class means, and
/// one pooled (LDA) or per-class (QDA) positive-definite covariance.
#[derive(Debug, Clone)]
pub struct FittedDiscriminant {
    kind: DiscriminantKind,
    priors: Vec<f64>,
    means: DMatrix<f64>,
    covariances: Vec<CovarianceTerm>,
}

#[derive(Serialize)]
struct ModelJson<'a> {
    kind: &'a str,
    priors: &'a [f64],
    means: Vec<Vec<f64>>,
    covariances: Vec<Vec<Vec<f64>>>,
}

impl FittedDiscriminant {
    pub fn kind(&self) -> DiscriminantKind {
        self.kind
    }

    pub fn priors(&self) -> &[f64] {
        &self.priors
    }

    pub fn n_classes(&self) -> usize {
        self.priors.len()
    }

    pub fn dim(&self) -> usize {
        self.means.ncols()
    }

    pub fn mean(&self, class: usize) -> DVector<f64> {
        self.means.row(class).transpose()
    }

    pub fn covariance(&self, class: usize) -> &DMatrix<f64> {
        match self.kind {
            DiscriminantKind::Lda => &self.covariances[0].matrix,
            DiscriminantKind::Qda => &self.covariances[class].matrix,
        }
    }

    fn term(&self, class: usize) -> &CovarianceTerm {
        match self.kind {
            DiscriminantKind::Lda => &self.covariances[0],
            DiscriminantKind::Qda => &self.covariances[class],
        }
    }

    /// Log-scale discriminant score of `x` under class `class`:
    /// `log prior − ½ log|Σ| − ½ (x−μ)ᵀ Σ⁻¹ (x−μ)`.
    pub fn score(&self, class: usize, x: &DVector<f64>) -> f64 {
        let term = self.term(class);
        let centered = x - self.mean(class);
        let maha = (term.inverse.clone() * &centered).dot(&centered);
        self.priors[class].ln() - 0.5 * term.log_det - 0.5 * maha
    }

    /// Plug-in Bayes prediction; ties resolve to the smallest class id.
    pub fn predict(&self, x: &DVector<f64>) -> Result<usize> {
        if x.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: x.len(),
            });
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFiniteInput);
        }
        let mut best = (0usize, f64::NEG_INFINITY);
        for c in 0..self.n_classes() {
            let s = self.score(c, x);
            if s > best.1 {
                best = (c, s);
            }
        }
        Ok(best.0)
    }

    pub fn predict_batch(&self, data: &Dataset) -> Result<Vec<usize>> {
        (0..data.n_samples()).map(|i| self.predict(&data.row(i))).collect()
    }

    /// Unweighted misclassification fraction on a labeled test set.
    pub fn error_rate(&self, test: &Dataset) -> Result<f64> {
        let labels = test.labels().ok_or_else(|| Error::MissingLabels {
            name: test.name().to_owned(),
        })?;
        if test.n_samples() == 0 {
            return Err(Error::EmptyTestSet);
        }
        let predictions = self.predict_batch(test)?;
        let wrong = predictions
            .iter()
            .zip(labels)
            .filter(|(p, l)| *p != *l)
            .count();
        Ok(wrong as f64 / test.n_samples() as f64)
    }

    /// Inspection JSON (not a stability-guaranteed format).
    pub fn to_json(&self) -> String {
        let d = self.dim();
        let means = (0..self.n_classes())
            .map(|c| (0..d).map(|j| self.means[(c, j)]).collect())
            .collect();
        let covariances = self
            .covariances
            .iter()
            .map(|t| {
                (0..d)
                    .map(|i| (0..d).map(|j| t.matrix[(i, j)]).collect())
                    .collect()
            })
            .collect();
        serde_json::to_string_pretty(&ModelJson {
            kind: self.kind.name(),
            priors: &self.priors,
            means,
            covariances,
        })
        .expect("model serialization cannot fail")
    }
}

/// Fits weighted LDA or QDA on a labeled training set.
///
/// For class c with weight mass `W_c`: prior = `W_c/ΣW`, mean = weighted
/// average, covariance = weighted scatter about the class mean divided by
/// `W_c` (QDA) or the `W_c`-weighted average of class covariances (LDA).
/// The estimates are invariant to rescaling all weights by a positive
/// constant.
pub fn fit_weighted(
    kind: DiscriminantKind,
    train: &Dataset,
    weights: &WeightVector,
) -> std::result::Result<FittedDiscriminant, ClassifyError> {
    let labels = train
        .labels()
        .ok_or_else(|| Error::MissingLabels {
            name: train.name().to_owned(),
        })
        .map_err(ClassifyError::Invalid)?;
    if weights.len() != train.n_samples() {
        return Err(ClassifyError::Invalid(Error::WeightLengthMismatch {
            expected: train.n_samples(),
            got: weights.len(),
        }));
    }
    let (n, d, c_count) = (train.n_samples(), train.dim(), train.n_classes());
    let x = train.features();
    let w = weights.values();

    let mut class_weight = vec![0.0f64; c_count];
    for i in 0..n {
        class_weight[labels[i]] += w[i];
    }
    if let Some(class) = class_weight.iter().position(|&cw| cw <= 0.0) {
        return Err(ClassifyError::Failure(FitFailure::ZeroClassWeight { class }));
    }
    let total_weight: f64 = class_weight.iter().sum();

    let priors: Vec<f64> = class_weight.iter().map(|cw| cw / total_weight).collect();

    let mut means = DMatrix::zeros(c_count, d);
    for i in 0..n {
        let c = labels[i];
        for j in 0..d {
            means[(c, j)] += w[i] * x[(i, j)];
        }
    }
    for c in 0..c_count {
        for j in 0..d {
            means[(c, j)] /= class_weight[c];
        }
    }

    let mut scatter: Vec<DMatrix<f64>> = vec![DMatrix::zeros(d, d); c_count];
    let mut centered = DVector::zeros(d);
    for i in 0..n {
        let c = labels[i];
        for j in 0..d {
            centered[j] = x[(i, j)] - means[(c, j)];
        }
        // w (x-mu)(x-mu)^T accumulated in place
        for a in 0..d {
            let wa = w[i] * centered[a];
            for b in 0..d {
                scatter[c][(a, b)] += wa * centered[b];
            }
        }
    }

    let covariances = match kind {
        DiscriminantKind::Qda => {
            let mut terms = Vec::with_capacity(c_count);
            for (c, s) in scatter.into_iter().enumerate() {
                let cov = s / class_weight[c];
                terms.push(
                    CovarianceTerm::factor(cov, &format!("class {c}"))
                        .map_err(ClassifyError::Failure)?,
                );
            }
            terms
        }
        DiscriminantKind::Lda => {
            let mut pooled = DMatrix::zeros(d, d);
            for s in &scatter {
                pooled += s;
            }
            pooled /= total_weight;
            vec![CovarianceTerm::factor(pooled, "pooled").map_err(ClassifyError::Failure)?]
        }
    };

    Ok(FittedDiscriminant {
        kind,
        priors,
        means,
        covariances,
    })
}
