//! Sampler for the finite-sample coverage error process
//!
//! S(x) = √n·( P*(|y_f − x_fᵀβ̂| ≤ x) − P*(|y*_f − x_fᵀβ̂*| ≤ x) ),
//!
//! the quantity whose limit law N(0, 𝒰(x)) drives the guarantee
//! adjustment. Each draw simulates one data set, evaluates the true-world
//! conditional probability in closed form, and estimates the bootstrap-world
//! probability by a nested resampling pass.

use nalgebra::DVector;
use rand::Rng;
use rayon::prelude::*;

use crate::empirical::RngStream;
use crate::model::{qr_decompose, weights_from_qr, Dataset};
use crate::special::normal_cdf;
use crate::theory::TheoryContext;
use crate::{Error, Result};

/// Draws `n_draws` realizations of the two-sided process S on `x_grid`
/// (all grid points must be positive). Returns an n_draws × |grid| matrix
/// as rows. The response in `data` is ignored: only the design matters,
/// and each draw simulates fresh errors from `ctx.dist()`.
///
/// `nested_size` controls the bootstrap-world estimate: each of the
/// `nested_size` replicates integrates the future error against the exact
/// pool ECDF, so its Monte Carlo noise is far below 1/√nested_size.
pub fn sample_error_process(
    ctx: &TheoryContext,
    data: &Dataset,
    n_draws: usize,
    x_grid: &[f64],
    nested_size: usize,
    stream: RngStream,
) -> Result<Vec<Vec<f64>>> {
    if x_grid.iter().any(|&x| x <= 0.0) {
        return Err(Error::InvalidConfig(
            "two-sided process grid points must be positive".into(),
        ));
    }
    run_process(ctx, data, n_draws, x_grid, nested_size, stream, true)
}

/// One-sided variant: S₁(x) = √n·(P*(y_f − x_fᵀβ̂ ≤ x) − P*(y*_f − x_fᵀβ̂* ≤ x)).
///
/// Its limit covariance at (x, z) is 𝒱(x, z) directly (the two-sided
/// process is the increment S(x) = S₁(x) − S₁(−x⁻)), which makes it the
/// Monte Carlo oracle for the covariance function itself.
pub fn sample_signed_error_process(
    ctx: &TheoryContext,
    data: &Dataset,
    n_draws: usize,
    x_grid: &[f64],
    nested_size: usize,
    stream: RngStream,
) -> Result<Vec<Vec<f64>>> {
    run_process(ctx, data, n_draws, x_grid, nested_size, stream, false)
}

fn run_process(
    ctx: &TheoryContext,
    data: &Dataset,
    n_draws: usize,
    x_grid: &[f64],
    nested_size: usize,
    stream: RngStream,
    two_sided: bool,
) -> Result<Vec<Vec<f64>>> {
    if n_draws == 0 || nested_size == 0 || x_grid.is_empty() {
        return Err(Error::InvalidConfig(
            "process sampling needs draws, nested replicates, and a non-empty grid".into(),
        ));
    }
    let (q, r) = qr_decompose(data.x())?;
    let weights = weights_from_qr(&q, &r, ctx.summary().xf())?;
    let weights = weights.as_slice();
    let n = data.n();
    let sqrt_n = (n as f64).sqrt();
    let dist = ctx.dist();

    let rows = (0..n_draws as u64)
        .into_par_iter()
        .map(|draw| {
            let mut rng = stream.child(draw).child(0).rng();
            let errors = dist.sample_vec(n, &mut rng);
            let delta: f64 = weights.iter().zip(&errors).map(|(w, e)| w * e).sum();

            // Centered fitted residuals of the simulated regression; the
            // coefficient part cancels, so no response is ever formed.
            let errors_v = DVector::from_column_slice(&errors);
            let fitted = &q * q.tr_mul(&errors_v);
            let mut pool: Vec<f64> = (0..n).map(|i| errors[i] - fitted[i]).collect();
            let mean = pool.iter().sum::<f64>() / n as f64;
            for v in &mut pool {
                *v -= mean;
            }
            pool.sort_by(f64::total_cmp);

            // Bootstrap-world coverage: for each nested replicate compute
            // the prediction shift m* = wᵀε*, then integrate the future
            // error exactly against the pool ECDF.
            let mut rng_nested = stream.child(draw).child(1).rng();
            let mut hits = vec![0_u64; x_grid.len()];
            for _ in 0..nested_size {
                let mut m = 0.0;
                for &w in weights.iter().take(n) {
                    m += w * pool[rng_nested.random_range(0..n)];
                }
                for (j, &x) in x_grid.iter().enumerate() {
                    let count = if two_sided {
                        count_le(&pool, m + x) - count_lt(&pool, m - x)
                    } else {
                        count_le(&pool, m + x)
                    };
                    hits[j] += count as u64;
                }
            }

            let scale = (nested_size * n) as f64;
            x_grid
                .iter()
                .zip(&hits)
                .map(|(&x, &h)| {
                    let truth = if two_sided {
                        dist.cdf(x + delta) - dist.cdf(-x + delta)
                    } else {
                        dist.cdf(x + delta)
                    };
                    sqrt_n * (truth - h as f64 / scale)
                })
                .collect()
        })
        .collect();
    Ok(rows)
}

/// Number of pool values ≤ t.
fn count_le(sorted: &[f64], t: f64) -> usize {
    sorted.partition_point(|&v| v <= t)
}

/// Number of pool values < t.
fn count_lt(sorted: &[f64], t: f64) -> usize {
    sorted.partition_point(|&v| v < t)
}

/// Kolmogorov–Smirnov distance between a sample and N(0, sd²).
pub fn ks_distance_to_normal(samples: &[f64], sd: f64) -> f64 {
    assert!(sd > 0.0, "sd must be positive, got {sd}");
    assert!(!samples.is_empty(), "need at least one sample");
    let mut sorted = samples.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len() as f64;
    let mut d: f64 = 0.0;
    for (i, &x) in sorted.iter().enumerate() {
        let f = normal_cdf(x / sd);
        d = d.max(f - i as f64 / n).max((i + 1) as f64 / n - f);
    }
    d
}
