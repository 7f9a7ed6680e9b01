//! Uniform dispatch over the available weight estimators.

use crate::baselines::{
    kliep_fit, parzen_ratio, ulsif_fit, BandwidthRule, KliepOptions, UlsifOptions,
};
use crate::data::Dataset;
use crate::error::{Error, EstimatorError};
use crate::nnw::{build_index, nnew_plus_one, nnew_weights, Acceleration};
use crate::weights::WeightVector;

/// Every estimator the CLI and benchmark can name.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Estimator {
    Uniform,
    Nnew,
    Nnew1,
    Kliep,
    Ulsif,
    Parzen,
}

pub const ALL_ESTIMATORS: [Estimator; 6] = [
    Estimator::Kliep,
    Estimator::Ulsif,
    Estimator::Parzen,
    Estimator::Nnew,
    Estimator::Nnew1,
    Estimator::Uniform,
];

impl Estimator {
    pub fn name(self) -> &'static str {
        match self {
            Estimator::Uniform => "uniform",
            Estimator::Nnew => "nnew",
            Estimator::Nnew1 => "nnew1",
            Estimator::Kliep => "kliep",
            Estimator::Ulsif => "ulsif",
            Estimator::Parzen => "parzen",
        }
    }
}

impl std::str::FromStr for Estimator {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self, Error> {
        match s.to_ascii_lowercase().as_str() {
            "uniform" => Ok(Estimator::Uniform),
            "nnew" => Ok(Estimator::Nnew),
            "nnew1" => Ok(Estimator::Nnew1),
            "kliep" => Ok(Estimator::Kliep),
            "ulsif" => Ok(Estimator::Ulsif),
            "parzen" => Ok(Estimator::Parzen),
            other => Err(Error::InvalidArgument(format!(
                "unknown estimator `{other}` (expected nnew|nnew1|kliep|ulsif|parzen|uniform)"
            ))),
        }
    }
}

/// Shared knobs for [`estimate_weights`]. The per-call `seed` argument
/// overrides the seeds inside the kernel-estimator options.
#[derive(Debug, Clone)]
pub struct EstimatorOptions {
    pub acceleration: Acceleration,
    pub bandwidth_rule: BandwidthRule,
    pub kliep: KliepOptions,
    pub ulsif: UlsifOptions,
}

impl Default for EstimatorOptions {
    fn default() -> Self {
        Self {
            acceleration: Acceleration::KdTree,
            bandwidth_rule: BandwidthRule::Silverman,
            kliep: KliepOptions::default(),
            ulsif: UlsifOptions::default(),
        }
    }
}

/// Estimates importance weights for the source rows against the target
/// sample. Weights come back in each estimator's native scale; callers that
/// feed classifiers normalize to mean one first.
pub fn estimate_weights(
    estimator: Estimator,
    source: &Dataset,
    target: &Dataset,
    options: &EstimatorOptions,
    seed: u64,
) -> Result<WeightVector, EstimatorError> {
    if source.dim() != target.dim() {
        return Err(EstimatorError::Invalid(Error::DimensionMismatch {
            expected: source.dim(),
            got: target.dim(),
        }));
    }
    match estimator {
        Estimator::Uniform => Ok(WeightVector::uniform(source.n_samples())),
        Estimator::Nnew => {
            let index = build_index(source, options.acceleration).map_err(EstimatorError::Invalid)?;
            nnew_weights(&index, target).map_err(EstimatorError::Invalid)
        }
        Estimator::Nnew1 => {
            let index = build_index(source, options.acceleration).map_err(EstimatorError::Invalid)?;
            nnew_plus_one(&index, target).map_err(EstimatorError::Invalid)
        }
        Estimator::Parzen => {
            parzen_ratio(source, target, options.bandwidth_rule).map_err(EstimatorError::Invalid)
        }
        Estimator::Kliep => {
            let opts = KliepOptions {
                seed,
                ..options.kliep.clone()
            };
            kliep_fit(source, target, &opts).map(|fit| fit.weights)
        }
        Estimator::Ulsif => {
            let opts = UlsifOptions {
                seed,
                ..options.ulsif.clone()
            };
            ulsif_fit(source, target, &opts).map(|fit| fit.weights)
        }
    }
}
