//! Analytic source/target density families for oracle validation. The true
//! importance weight `p_τ(x)/p_ς(x)` is available in closed form, so
//! estimated weights can be scored against it.

use nalgebra::DVector;
use rand::Rng;
use rand_distr::{Distribution, Normal};

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::seeding::rng_from;

/// Gaussian with a diagonal covariance.
#[derive(Debug, Clone)]
pub struct GaussianDensity {
    mean: DVector<f64>,
    variances: DVector<f64>,
}

impl GaussianDensity {
    pub fn new(mean: DVector<f64>, variances: DVector<f64>) -> Result<Self> {
        if mean.len() != variances.len() || mean.is_empty() {
            return Err(Error::InvalidArgument(
                "mean and variance dimensions must match and be nonzero".into(),
            ));
        }
        if variances.iter().any(|&v| !(v > 0.0) || !v.is_finite()) {
            return Err(Error::InvalidArgument(
                "variances must be positive and finite".into(),
            ));
        }
        Ok(Self { mean, variances })
    }

    pub fn spherical(dim: usize, mean: f64, variance: f64) -> Result<Self> {
        Self::new(
            DVector::from_element(dim, mean),
            DVector::from_element(dim, variance),
        )
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn log_density(&self, x: &DVector<f64>) -> f64 {
        let mut acc = 0.0;
        for j in 0..self.dim() {
            let z = x[j] - self.mean[j];
            acc += -0.5 * z * z / self.variances[j]
                - 0.5 * (2.0 * std::f64::consts::PI * self.variances[j]).ln();
        }
        acc
    }

    fn sample_into(&self, n: usize, rng: &mut impl Rng) -> Vec<Vec<f64>> {
        let dists: Vec<Normal<f64>> = (0..self.dim())
            .map(|j| Normal::new(self.mean[j], self.variances[j].sqrt()).unwrap())
            .collect();
        (0..n)
            .map(|_| dists.iter().map(|d| d.sample(rng)).collect())
            .collect()
    }
}

/// A named covariate-shift instance: two analytic densities over the same
/// space, with the pointwise density ratio as the ground-truth weight.
#[derive(Debug, Clone)]
pub struct SyntheticShift {
    source: GaussianDensity,
    target: GaussianDensity,
}

impl SyntheticShift {
    pub fn new(source: GaussianDensity, target: GaussianDensity) -> Result<Self> {
        if source.dim() != target.dim() {
            return Err(Error::DimensionMismatch {
                expected: source.dim(),
                got: target.dim(),
            });
        }
        Ok(Self { source, target })
    }

    /// `N(0, I) → N(δ·e₁, I)`: the target mean moves by `delta` along the
    /// first coordinate.
    pub fn gaussian_mean_shift(dim: usize, delta: f64) -> Result<Self> {
        let source = GaussianDensity::spherical(dim, 0.0, 1.0)?;
        let mut mean = DVector::zeros(dim);
        mean[0] = delta;
        let target = GaussianDensity::new(mean, DVector::from_element(dim, 1.0))?;
        Self::new(source, target)
    }

    /// `N(0, I) → N(0, s²·I)`.
    pub fn gaussian_scale_shift(dim: usize, scale: f64) -> Result<Self> {
        if !(scale > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "scale must be positive, got {scale}"
            )));
        }
        let source = GaussianDensity::spherical(dim, 0.0, 1.0)?;
        let target = GaussianDensity::spherical(dim, 0.0, scale * scale)?;
        Self::new(source, target)
    }

    /// Parses a family spec: `gauss-mean:<delta>` or `gauss-scale:<s>`.
    pub fn parse(spec: &str, dim: usize) -> Result<Self> {
        let (family, param) = spec.split_once(':').ok_or_else(|| {
            Error::InvalidArgument(format!(
                "shift spec `{spec}` must look like gauss-mean:<delta> or gauss-scale:<s>"
            ))
        })?;
        let value: f64 = param.parse().map_err(|_| {
            Error::InvalidArgument(format!("cannot parse shift parameter `{param}`"))
        })?;
        match family {
            "gauss-mean" => Self::gaussian_mean_shift(dim, value),
            "gauss-scale" => Self::gaussian_scale_shift(dim, value),
            other => Err(Error::InvalidArgument(format!(
                "unknown shift family `{other}` (expected gauss-mean|gauss-scale)"
            ))),
        }
    }

    pub fn dim(&self) -> usize {
        self.source.dim()
    }

    pub fn source(&self) -> &GaussianDensity {
        &self.source
    }

    pub fn target(&self) -> &GaussianDensity {
        &self.target
    }

    pub fn log_ratio(&self, x: &DVector<f64>) -> f64 {
        self.target.log_density(x) - self.source.log_density(x)
    }

    /// True importance weight `p_τ(x)/p_ς(x)`.
    pub fn true_ratio(&self, x: &DVector<f64>) -> f64 {
        self.log_ratio(x).exp()
    }

    pub fn sample_source(&self, n: usize, seed: u64) -> Result<Dataset> {
        let rows = self.source.sample_into(n, &mut rng_from(seed));
        Dataset::from_rows("synthetic-source", &rows, None)
    }

    pub fn sample_target(&self, n: usize, seed: u64) -> Result<Dataset> {
        let rows = self.target.sample_into(n, &mut rng_from(seed));
        Dataset::from_rows("synthetic-target", &rows, None)
    }
}
