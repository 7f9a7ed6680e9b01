use std::io::Write;

use crate::error::{Error, Result};

/// Scale convention of a weight vector.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Normalization {
    /// Raw target counts (or other estimator-native scale).
    RawCounts,
    /// Mean of the entries is one.
    MeanOne,
}

/// Nonnegative per-source-sample importance weights.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightVector {
    values: Vec<f64>,
    normalization: Normalization,
}

impl WeightVector {
    pub fn new(values: Vec<f64>, normalization: Normalization) -> Result<Self> {
        if let Some(bad) = values.iter().find(|v| !v.is_finite() || **v < 0.0) {
            return Err(Error::InvalidArgument(format!(
                "weights must be finite and nonnegative, got {bad}"
            )));
        }
        Ok(Self {
            values,
            normalization,
        })
    }

    pub fn uniform(n: usize) -> Self {
        Self {
            values: vec![1.0; n],
            normalization: Normalization::MeanOne,
        }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn normalization(&self) -> Normalization {
        self.normalization
    }

    pub fn sum(&self) -> f64 {
        self.values.iter().sum()
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn mean(&self) -> f64 {
        self.sum() / self.len() as f64
    }

    pub fn zero_count(&self) -> usize {
        self.values.iter().filter(|&&v| v == 0.0).count()
    }

    pub fn positive_count(&self) -> usize {
        self.len() - self.zero_count()
    }

    /// Single-column CSV with header `weight`, row order = source row order.
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "weight")?;
        for v in &self.values {
            writeln!(out, "{v}")?;
        }
        Ok(())
    }
}

/// Rescales weights so their mean is exactly one: `w · N/Σw`.
///
/// Preserves all weight ratios and the argmax. An all-zero input is an
/// error; it signals weight starvation upstream.
pub fn normalize_mean_one(w: &WeightVector) -> Result<WeightVector> {
    let total = w.sum();
    if total <= 0.0 {
        return Err(Error::AllZeroWeights);
    }
    let scale = w.len() as f64 / total;
    WeightVector::new(
        w.values().iter().map(|v| v * scale).collect(),
        Normalization::MeanOne,
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn normalize_example() {
        let w = WeightVector::new(vec![2.0, 1.0, 1.0], Normalization::RawCounts).unwrap();
        let n = normalize_mean_one(&w).unwrap();
        assert_eq!(n.values(), &[1.5, 0.75, 0.75]);
        assert!((n.mean() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn normalize_is_idempotent_on_mean_one_input() {
        let w = WeightVector::new(vec![1.5, 0.75, 0.75], Normalization::MeanOne).unwrap();
        let n = normalize_mean_one(&w).unwrap();
        assert_eq!(n.values(), w.values());
    }

    #[test]
    fn normalize_all_zero_fails() {
        let w = WeightVector::new(vec![0.0, 0.0], Normalization::RawCounts).unwrap();
        assert!(matches!(
            normalize_mean_one(&w),
            Err(Error::AllZeroWeights)
        ));
    }

    #[test]
    fn normalize_preserves_argmax_and_ratios() {
        let w = WeightVector::new(vec![3.0, 9.0, 1.0], Normalization::RawCounts).unwrap();
        let n = normalize_mean_one(&w).unwrap();
        assert_eq!(n.values()[1], n.max());
        assert!((n.values()[1] / n.values()[0] - 3.0).abs() < 1e-12);
    }

    #[test]
    fn csv_shape() {
        let w = WeightVector::new(vec![2.0, 0.5], Normalization::RawCounts).unwrap();
        let mut buf = Vec::new();
        w.write_csv(&mut buf).unwrap();
        assert_eq!(std::str::from_utf8(&buf).unwrap(), "weight\n2\n0.5\n");
    }

    #[test]
    fn rejects_negative_and_non_finite() {
        assert!(WeightVector::new(vec![-1.0], Normalization::RawCounts).is_err());
        assert!(WeightVector::new(vec![f64::NAN], Normalization::RawCounts).is_err());
    }
}
