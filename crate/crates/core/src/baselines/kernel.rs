//! Shared Gaussian-kernel machinery for the ratio estimators.

use nalgebra::{DMatrix, DVector};

use crate::data::Dataset;

/// Kernel-expansion weight model: `ŵ(x) = Σ_ℓ α_ℓ exp(−‖x−c_ℓ‖²/(2σ²))`
/// with centers drawn from the target sample.
#[derive(Debug, Clone)]
pub struct KernelModel {
    centers: DMatrix<f64>,
    sigma: f64,
    alpha: DVector<f64>,
}

impl KernelModel {
    pub fn new(centers: DMatrix<f64>, sigma: f64, alpha: DVector<f64>) -> Self {
        assert_eq!(centers.nrows(), alpha.len());
        assert!(sigma > 0.0);
        Self {
            centers,
            sigma,
            alpha,
        }
    }

    pub fn n_centers(&self) -> usize {
        self.centers.nrows()
    }

    pub fn dim(&self) -> usize {
        self.centers.ncols()
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn alpha(&self) -> &DVector<f64> {
        &self.alpha
    }

    pub fn centers(&self) -> &DMatrix<f64> {
        &self.centers
    }

    /// Evaluates the weight function at one point.
    pub fn evaluate(&self, x: &DVector<f64>) -> f64 {
        let two_sigma_sq = 2.0 * self.sigma * self.sigma;
        let mut acc = 0.0;
        for l in 0..self.n_centers() {
            let mut d2 = 0.0;
            for j in 0..self.dim() {
                let diff = x[j] - self.centers[(l, j)];
                d2 += diff * diff;
            }
            acc += self.alpha[l] * (-d2 / two_sigma_sq).exp();
        }
        acc
    }

    /// Evaluates the weight function at every row of `data`.
    pub fn weights_at(&self, data: &Dataset) -> Vec<f64> {
        let gram = gaussian_gram(data.features(), &self.centers, self.sigma);
        (gram * &self.alpha).iter().copied().collect()
    }
}

/// `K[i,ℓ] = exp(−‖points_i − centers_ℓ‖²/(2σ²))`.
pub(crate) fn gaussian_gram(
    points: &DMatrix<f64>,
    centers: &DMatrix<f64>,
    sigma: f64,
) -> DMatrix<f64> {
    let (n, d) = (points.nrows(), points.ncols());
    let b = centers.nrows();
    let two_sigma_sq = 2.0 * sigma * sigma;
    DMatrix::from_fn(n, b, |i, l| {
        let mut d2 = 0.0;
        for j in 0..d {
            let diff = points[(i, j)] - centers[(l, j)];
            d2 += diff * diff;
        }
        (-d2 / two_sigma_sq).exp()
    })
}

/// Median pairwise distance over the target rows (the kernel centers live
/// there, so the bandwidth must resolve target geometry), subsampled with a
/// fixed stride to at most 500 rows. Falls back to 1.0 when every
/// subsampled point coincides.
pub fn median_heuristic(target: &Dataset) -> f64 {
    let stride = target.n_samples().div_ceil(500);
    let mut rows: Vec<DVector<f64>> = Vec::new();
    for j in (0..target.n_samples()).step_by(stride) {
        rows.push(target.row(j));
    }
    if rows.len() < 2 {
        return 1.0;
    }
    let mut dists: Vec<f64> = Vec::with_capacity(rows.len() * (rows.len() - 1) / 2);
    for a in 0..rows.len() {
        for b in (a + 1)..rows.len() {
            dists.push((&rows[a] - &rows[b]).norm());
        }
    }
    if dists.is_empty() {
        return 1.0;
    }
    dists.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let median = dists[dists.len() / 2];
    if median > 0.0 {
        median
    } else {
        1.0
    }
}

/// Bandwidth candidates: median heuristic scaled by {1/8, 1/4, 1/2, 1, 2, 4}.
pub fn default_sigma_grid(median: f64) -> Vec<f64> {
    [0.125, 0.25, 0.5, 1.0, 2.0, 4.0]
        .iter()
        .map(|f| f * median)
        .collect()
}

/// Ridge candidates for the least-squares fit.
pub fn default_lambda_grid() -> Vec<f64> {
    vec![1e-3, 1e-2, 1e-1, 1.0, 10.0]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn evaluate_matches_gram_product() {
        let centers = DMatrix::from_row_slice(2, 2, &[0.0, 0.0, 1.0, 1.0]);
        let model = KernelModel::new(centers, 0.7, DVector::from_vec(vec![2.0, 3.0]));
        let ds = Dataset::from_rows("q", &[vec![0.5, 0.5], vec![-1.0, 2.0]], None).unwrap();
        let via_gram = model.weights_at(&ds);
        for i in 0..2 {
            let direct = model.evaluate(&ds.row(i));
            assert!((via_gram[i] - direct).abs() < 1e-12);
        }
    }

    #[test]
    fn kernel_at_center_is_alpha() {
        let centers = DMatrix::from_row_slice(1, 1, &[3.0]);
        let model = KernelModel::new(centers, 1.0, DVector::from_vec(vec![5.0]));
        assert!((model.evaluate(&DVector::from_vec(vec![3.0])) - 5.0).abs() < 1e-12);
    }

    #[test]
    fn median_heuristic_on_unit_pair() {
        let a = Dataset::from_rows("a", &[vec![0.0], vec![1.0]], None).unwrap();
        assert_eq!(median_heuristic(&a), 1.0);
    }

    #[test]
    fn median_heuristic_degenerate_falls_back() {
        let a = Dataset::from_rows("a", &[vec![2.0], vec![2.0]], None).unwrap();
        assert_eq!(median_heuristic(&a), 1.0);
    }
}
