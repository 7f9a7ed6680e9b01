//! Parzen-window density-ratio estimation: two separate Gaussian kernel
//! density estimates, weights are their pointwise ratio at the source rows.

use nalgebra::DMatrix;

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::weights::{normalize_mean_one, Normalization, WeightVector};

/// Bandwidth selection for each density estimate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BandwidthRule {
    /// Silverman's rule with a spherical kernel:
    /// `h = σ̄ · (4 / ((d+2)·n))^(1/(d+4))` where σ̄² is the mean per-axis
    /// sample variance.
    Silverman,
    Fixed(f64),
}

fn silverman_bandwidth(data: &Dataset) -> f64 {
    let x = data.features();
    let (n, d) = (x.nrows(), x.ncols());
    let mut var_sum = 0.0;
    for j in 0..d {
        let col = x.column(j);
        let mean = col.sum() / n as f64;
        var_sum += col.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n as f64 - 1.0);
    }
    let sigma_bar = (var_sum / d as f64).sqrt();
    let h = sigma_bar * (4.0 / ((d as f64 + 2.0) * n as f64)).powf(1.0 / (d as f64 + 4.0));
    if h > 0.0 {
        h
    } else {
        // all points identical; any positive bandwidth gives the same ratio
        1e-9
    }
}

fn bandwidth(data: &Dataset, rule: BandwidthRule) -> Result<f64> {
    match rule {
        BandwidthRule::Fixed(h) if h > 0.0 => Ok(h),
        BandwidthRule::Fixed(h) => Err(Error::InvalidArgument(format!(
            "bandwidth must be positive, got {h}"
        ))),
        BandwidthRule::Silverman => {
            if data.n_samples() < 2 {
                return Err(Error::InvalidArgument(
                    "silverman bandwidth needs at least 2 samples".into(),
                ));
            }
            Ok(silverman_bandwidth(data))
        }
    }
}

/// Log of the kernel density estimate of `sample` evaluated at each row of
/// `points`, computed in the log domain so tiny bandwidths stay finite.
fn log_density_at(points: &DMatrix<f64>, sample: &DMatrix<f64>, h: f64) -> Vec<f64> {
    let (n, d) = (sample.nrows(), sample.ncols());
    let log_norm = -(n as f64).ln()
        - d as f64 / 2.0 * (2.0 * std::f64::consts::PI).ln()
        - d as f64 * h.ln();
    let inv_two_h2 = 1.0 / (2.0 * h * h);
    (0..points.nrows())
        .map(|i| {
            // log-sum-exp over the kernel exponents
            let mut max = f64::NEG_INFINITY;
            let exps: Vec<f64> = (0..n)
                .map(|k| {
                    let mut d2 = 0.0;
                    for j in 0..d {
                        let diff = points[(i, j)] - sample[(k, j)];
                        d2 += diff * diff;
                    }
                    let e = -d2 * inv_two_h2;
                    if e > max {
                        max = e;
                    }
                    e
                })
                .collect();
            if max == f64::NEG_INFINITY {
                return f64::NEG_INFINITY;
            }
            let sum: f64 = exps.iter().map(|e| (e - max).exp()).sum();
            max + sum.ln() + log_norm
        })
        .collect()
}

/// Weights `w_i = p̂_τ(x_i) / p̂_ς(x_i)` at the source rows, normalized to
/// mean one. The source density at a source row is always positive (the
/// row is one of its own kernel centers), so the ratio is well defined.
pub fn parzen_ratio(
    source: &Dataset,
    target: &Dataset,
    rule: BandwidthRule,
) -> Result<WeightVector> {
    if source.dim() != target.dim() {
        return Err(Error::DimensionMismatch {
            expected: source.dim(),
            got: target.dim(),
        });
    }
    let h_source = bandwidth(source, rule)?;
    let h_target = bandwidth(target, rule)?;

    let log_ps = log_density_at(source.features(), source.features(), h_source);
    let log_pt = log_density_at(source.features(), target.features(), h_target);

    // shift-invariant under mean-one normalization; the shift keeps exp finite
    let log_ratios: Vec<f64> = log_pt.iter().zip(&log_ps).map(|(t, s)| t - s).collect();
    let shift = log_ratios
        .iter()
        .copied()
        .filter(|v| v.is_finite())
        .fold(f64::NEG_INFINITY, f64::max);
    if shift == f64::NEG_INFINITY {
        return Err(Error::AllZeroWeights);
    }
    let raw: Vec<f64> = log_ratios
        .iter()
        .map(|lr| {
            if lr.is_finite() {
                (lr - shift).exp()
            } else {
                0.0
            }
        })
        .collect();
    normalize_mean_one(&WeightVector::new(raw, Normalization::RawCounts)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identical_samples_give_unit_weights() {
        let rows: Vec<Vec<f64>> = (0..20).map(|i| vec![i as f64 * 0.3, (i % 5) as f64]).collect();
        let a = Dataset::from_rows("a", &rows, None).unwrap();
        let b = Dataset::from_rows("b", &rows, None).unwrap();
        for rule in [BandwidthRule::Silverman, BandwidthRule::Fixed(0.5)] {
            let w = parzen_ratio(&a, &b, rule).unwrap();
            for &v in w.values() {
                assert!((v - 1.0).abs() < 1e-9, "{rule:?}: {v}");
            }
        }
    }

    #[test]
    fn mass_concentrates_where_target_sits() {
        let source = Dataset::from_rows("s", &[vec![-1.0], vec![1.0]], None).unwrap();
        let target = Dataset::from_rows("t", &[vec![1.0]], None).unwrap();
        let w = parzen_ratio(&source, &target, BandwidthRule::Fixed(0.1)).unwrap();
        assert!(
            w.values()[1] > 100.0 * w.values()[0],
            "weights {:?}",
            w.values()
        );
    }

    #[test]
    fn output_is_mean_one() {
        let source = Dataset::from_rows(
            "s",
            &(0..30).map(|i| vec![(i as f64) * 0.1]).collect::<Vec<_>>(),
            None,
        )
        .unwrap();
        let target = Dataset::from_rows(
            "t",
            &(0..25).map(|i| vec![1.0 + (i as f64) * 0.1]).collect::<Vec<_>>(),
            None,
        )
        .unwrap();
        let w = parzen_ratio(&source, &target, BandwidthRule::Silverman).unwrap();
        assert!((w.mean() - 1.0).abs() < 1e-9);
        assert_eq!(w.normalization(), Normalization::MeanOne);
    }

    #[test]
    fn dimension_mismatch_rejected() {
        let a = Dataset::from_rows("a", &[vec![0.0], vec![1.0]], None).unwrap();
        let b = Dataset::from_rows("b", &[vec![0.0, 1.0], vec![1.0, 2.0]], None).unwrap();
        assert!(matches!(
            parzen_ratio(&a, &b, BandwidthRule::Silverman),
            Err(Error::DimensionMismatch { .. })
        ));
    }
}
