//! Independent oracles for the baseline estimators: analytic log-ratio
//! correlation for Parzen, a Monte-Carlo KL improvement check for KLIEP,
//! and an independent dense solve for the uLSIF closed form.

use nalgebra::{DMatrix, DVector};

use covshift_core::{
    kliep_fit, parzen_ratio, ulsif_fit, BandwidthRule, Dataset, KliepOptions, SyntheticShift,
    UlsifOptions,
};
use covshift_core::experiment::pearson;

fn gaussian_1d(n: usize, mean: f64, seed: u64) -> Dataset {
    SyntheticShift::gaussian_mean_shift(1, mean)
        .unwrap()
        .sample_target(n, seed)
        .unwrap()
}

#[test]
fn parzen_log_weights_track_the_analytic_log_ratio() {
    // N(0,1) → N(0.5,1): log ratio is x/2 − 1/8, affine in x
    let source = gaussian_1d(2000, 0.0, 1);
    let target = gaussian_1d(2000, 0.5, 2);
    let w = parzen_ratio(&source, &target, BandwidthRule::Silverman).unwrap();

    let mut log_w = Vec::new();
    let mut analytic = Vec::new();
    for (i, &v) in w.values().iter().enumerate() {
        if v > 0.0 {
            log_w.push(v.ln());
            analytic.push(0.5 * source.features()[(i, 0)] - 0.125);
        }
    }
    assert!(log_w.len() > 1900, "too many zero weights: {}", log_w.len());
    let r = pearson(&log_w, &analytic);
    println!("parzen log-weight correlation: {r:.4}");
    assert!(r > 0.7, "correlation {r}");
}

#[test]
fn kliep_reduces_kl_divergence_below_uniform() {
    let source = gaussian_1d(1000, 0.0, 3);
    let target = gaussian_1d(1000, 0.5, 4);
    let options = KliepOptions {
        sigma_grid: Some(vec![0.25, 0.5, 1.0, 2.0]),
        ..Default::default()
    };
    let fit = kliep_fit(&source, &target, &options).unwrap();

    // Monte-Carlo estimate of KL(p_τ ‖ ŵ·p_ς) on held-out target draws,
    // with both densities analytic
    let shift = SyntheticShift::gaussian_mean_shift(1, 0.5).unwrap();
    let held_out = shift.sample_target(4000, 5).unwrap();
    let mut kl_fit = 0.0;
    let mut kl_uniform = 0.0;
    for i in 0..held_out.n_samples() {
        let x = held_out.row(i);
        let log_ratio = shift.log_ratio(&x);
        let w = fit.model.evaluate(&x).max(1e-300);
        kl_fit += log_ratio - w.ln();
        kl_uniform += log_ratio;
    }
    kl_fit /= held_out.n_samples() as f64;
    kl_uniform /= held_out.n_samples() as f64;
    println!("kl with kliep weights: {kl_fit:.4}; with uniform weights: {kl_uniform:.4}");
    assert!(kl_fit < kl_uniform, "{kl_fit} !< {kl_uniform}");
}

#[test]
fn ulsif_alpha_matches_an_independent_dense_solver() {
    // seeded instance; the oracle decomposes (H+λI)α = h with LU instead of
    // the production Cholesky route, from independently accumulated H and h
    let source = gaussian_1d(1000, 0.0, 6);
    let target = gaussian_1d(1000, 0.5, 7);
    let options = UlsifOptions {
        b_max: 60,
        ..Default::default()
    };
    let fit = ulsif_fit(&source, &target, &options).unwrap();

    let b = fit.model.n_centers();
    let sigma = fit.model.sigma();
    let lambda = fit.report.chosen().lambda.unwrap();
    let centers = fit.model.centers();

    let kernel = |x: &DVector<f64>, l: usize| {
        let mut d2 = 0.0;
        for j in 0..x.len() {
            let diff = x[j] - centers[(l, j)];
            d2 += diff * diff;
        }
        (-d2 / (2.0 * sigma * sigma)).exp()
    };
    let mut h_mat = DMatrix::<f64>::zeros(b, b);
    for i in 0..source.n_samples() {
        let x = source.row(i);
        for a in 0..b {
            let ka = kernel(&x, a);
            for c in 0..b {
                h_mat[(a, c)] += ka * kernel(&x, c);
            }
        }
    }
    h_mat /= source.n_samples() as f64;
    for i in 0..b {
        h_mat[(i, i)] += lambda;
    }
    let mut h_vec = DVector::<f64>::zeros(b);
    for j in 0..target.n_samples() {
        let x = target.row(j);
        for l in 0..b {
            h_vec[l] += kernel(&x, l);
        }
    }
    h_vec /= target.n_samples() as f64;

    let oracle_alpha = h_mat.lu().solve(&h_vec).unwrap();
    let diff = (&fit.alpha_raw - &oracle_alpha).abs().max();
    println!("max |alpha - oracle alpha| = {diff:.3e}");
    assert!(diff < 1e-8, "difference {diff}");
    assert!(fit.residual <= 1e-8);
}

#[test]
fn ulsif_residual_holds_across_seeds_and_shapes() {
    for (seed, n, b_max) in [(10u64, 200usize, 30usize), (11, 500, 100), (12, 800, 50)] {
        let source = gaussian_1d(n, 0.0, seed * 2 + 1);
        let target = gaussian_1d(n, 0.3, seed * 2 + 2);
        let options = UlsifOptions {
            b_max,
            seed,
            ..Default::default()
        };
        let fit = ulsif_fit(&source, &target, &options).unwrap();
        assert!(
            fit.residual <= 1e-8,
            "seed {seed}: residual {}",
            fit.residual
        );
    }
}
