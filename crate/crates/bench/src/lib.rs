//! Shared fixtures for the criterion benchmarks.

use guarantee_pi_core::model::{fit_ols, Dataset, FittedModel};
use guarantee_pi_core::simulation::generate_experiment_design;
use nalgebra::DVector;

/// A deterministic fitted model of the given size, for benchmarking
/// downstream stages without re-measuring the fit.
pub fn fixture_model(n: usize, p: usize) -> FittedModel {
    let x = generate_experiment_design(p, n, 1234);
    let y = DVector::from_fn(n, |i, _| x.row(i).sum() + ((i as f64) * 0.7).sin());
    fit_ols(Dataset::new(x, y).expect("valid fixture shape")).expect("full-rank fixture")
}

/// A prediction point matching the experiment model's geometry
/// (coordinates 0.1·i for i = 0, …, p−1).
pub fn fixture_xf(p: usize) -> Vec<f64> {
    (0..p).map(|i| 0.1 * i as f64).collect()
}
