//! Closed-form results for the Gaussian known-σ case: the ≈68% guarantee
//! level of the naive prediction interval, the χ²₁-corrected interval, and
//! Monte Carlo simulators for both (exact oracles for everything else).

use rayon::prelude::*;

use crate::empirical::{uniform_open01, RngStream};
use crate::intervals::{Method, PredictionInterval};
use crate::model::DesignSummary;
use crate::special::{chi_squared_1_cdf, chi_squared_1_quantile, normal_cdf, normal_pdf, normal_quantile};

/// Guarantee level of the naive known-σ interval x_fᵀβ̂ ± σ√(1+x_fᵀ(XᵀX)⁻¹x_f)·d₁₋α/₂:
/// P(χ²₁ ≤ Φ′(d)·d/(−Φ″(d))). Since −Φ″(d) = d·Φ′(d) the argument is
/// identically 1, so the value is P(χ²₁ ≤ 1) ≈ 0.6827 for every α.
pub fn naive_guarantee(alpha: f64) -> f64 {
    assert!(alpha > 0.0 && alpha < 1.0, "alpha must be in (0,1), got {alpha}");
    let d = normal_quantile(1.0 - alpha / 2.0);
    let phi_second = -d * normal_pdf(d);
    chi_squared_1_cdf(normal_pdf(d) * d / -phi_second)
}

/// The guarantee correction c₁₋γ = −Φ″(d)·x_fᵀ(XᵀX)⁻¹x_f·C₁₋γ/(2Φ′(d)),
/// where d = d₁₋α/₂, C₁₋γ is the 1−γ quantile of χ²₁, and `quad_small`
/// stands for x_fᵀ(XᵀX)⁻¹x_f (i.e. quad_aa/n).
pub fn correction_c(alpha: f64, gamma: f64, quad_small: f64) -> f64 {
    assert!(alpha > 0.0 && alpha < 1.0, "alpha must be in (0,1), got {alpha}");
    assert!(gamma > 0.0 && gamma < 1.0, "gamma must be in (0,1), got {gamma}");
    assert!(quad_small >= 0.0, "x_f'(X'X)^-1 x_f must be >= 0, got {quad_small}");
    let d = normal_quantile(1.0 - alpha / 2.0);
    let phi_second = -d * normal_pdf(d);
    -phi_second * quad_small * chi_squared_1_quantile(1.0 - gamma) / (2.0 * normal_pdf(d))
}

/// The corrected known-σ interval x_fᵀβ̂ ± σ(d₁₋α/₂ + c₁₋γ), which attains
/// guarantee level 1−γ asymptotically.
pub fn corrected_interval(
    alpha: f64,
    gamma: f64,
    sigma: f64,
    summary: &DesignSummary,
    beta_hat_xf: f64,
) -> PredictionInterval {
    assert!(sigma > 0.0, "sigma must be positive, got {sigma}");
    let d = normal_quantile(1.0 - alpha / 2.0);
    let c = correction_c(alpha, gamma, summary.quad_aa() / summary.n_obs() as f64);
    let half_width = sigma * (d + c);
    PredictionInterval {
        center: beta_hat_xf,
        half_width,
        lower: beta_hat_xf - half_width,
        upper: beta_hat_xf + half_width,
        nominal_alpha: alpha,
        nominal_gamma: Some(gamma),
        adjusted_level: 1.0 - alpha,
        method: Method::GaussianCorrected,
        d_hat: None,
        level_clipped: false,
    }
}

/// Conditional coverage of a known-σ Gaussian interval of half-width
/// `half` when the prediction is off by `delta`.
fn gaussian_conditional_coverage(delta: f64, half: f64, sigma: f64) -> f64 {
    normal_cdf((delta + half) / sigma) - normal_cdf((delta - half) / sigma)
}

/// Shared Monte Carlo driver: intercept-only design, known σ; simulates
/// δ = mean of n errors per replication and counts how often the interval
/// of the given half-width covers at level 1−α.
fn simulate_guarantee(
    alpha: f64,
    sigma: f64,
    n: usize,
    replications: usize,
    half: f64,
    stream: RngStream,
) -> f64 {
    let hits: usize = (0..replications as u64)
        .into_par_iter()
        .map(|r| {
            let mut rng = stream.child(r).rng();
            let mut sum = 0.0;
            for _ in 0..n {
                sum += normal_quantile(uniform_open01(&mut rng));
            }
            let delta = sigma * sum / n as f64;
            let coverage = gaussian_conditional_coverage(delta, half, sigma);
            usize::from(coverage >= 1.0 - alpha)
        })
        .sum();
    hits as f64 / replications as f64
}

/// Monte Carlo guarantee level of the naive interval
/// x_fᵀβ̂ ± σ√(1+1/n)·d₁₋α/₂ on an intercept-only design with known σ.
pub fn simulate_naive_guarantee(
    alpha: f64,
    sigma: f64,
    n: usize,
    replications: usize,
    stream: RngStream,
) -> f64 {
    let d = normal_quantile(1.0 - alpha / 2.0);
    let half = sigma * d * (1.0 + 1.0 / n as f64).sqrt();
    simulate_guarantee(alpha, sigma, n, replications, half, stream)
}

/// Monte Carlo guarantee level of the corrected interval
/// x_fᵀβ̂ ± σ(d₁₋α/₂ + c₁₋γ) on an intercept-only design with known σ.
pub fn simulate_corrected_guarantee(
    alpha: f64,
    gamma: f64,
    sigma: f64,
    n: usize,
    replications: usize,
    stream: RngStream,
) -> f64 {
    let d = normal_quantile(1.0 - alpha / 2.0);
    let c = correction_c(alpha, gamma, 1.0 / n as f64);
    let half = sigma * (d + c);
    simulate_guarantee(alpha, sigma, n, replications, half, stream)
}
