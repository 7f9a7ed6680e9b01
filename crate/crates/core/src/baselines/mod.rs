//! Comparison weight estimators: Parzen density ratio, KLIEP, and uLSIF.

mod cv;
mod kernel;
mod kliep;
mod parzen;
mod ulsif;

pub use cv::{CvCandidate, CvCriterion, CvReport};
pub use kernel::{default_lambda_grid, default_sigma_grid, median_heuristic, KernelModel};
pub use kliep::{kliep_fit, KliepFit, KliepOptions};
pub use parzen::{parzen_ratio, BandwidthRule};
pub use ulsif::{ulsif_fit, ulsif_solve, StarvationWarning, UlsifFit, UlsifOptions, WEIGHT_ZERO_EPS};
