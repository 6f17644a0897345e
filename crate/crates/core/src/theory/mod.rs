//! Asymptotic theory: the covariance function 𝒱, the variance 𝒰 of the
//! coverage error process, Gaussian closed-form oracles, and a sampler for
//! the finite-sample error process.

pub mod dist;
pub mod gaussian;
pub mod process;

pub use dist::ErrorDistribution;
pub use gaussian::{
    corrected_interval, correction_c, naive_guarantee, simulate_corrected_guarantee,
    simulate_naive_guarantee,
};
pub use process::{ks_distance_to_normal, sample_error_process, sample_signed_error_process};

use crate::model::DesignSummary;
use crate::{Error, Result};

/// Everything the asymptotic variance formulas need: an analytic error
/// distribution together with the design moments (A, b̄, x_f).
#[derive(Debug, Clone)]
pub struct TheoryContext {
    dist: ErrorDistribution,
    summary: DesignSummary,
}

impl TheoryContext {
    /// Validates and pairs a distribution with a design summary. The
    /// distribution must have a closed-form density (Normal or Laplace):
    /// the covariance function involves F′, which the empirical kind lacks.
    pub fn new(dist: ErrorDistribution, summary: DesignSummary) -> Result<Self> {
        dist.validate()?;
        if !dist.is_analytic() {
            return Err(Error::InvalidConfig(
                "theory formulas need a closed-form density; empirical errors have none".into(),
            ));
        }
        Ok(Self { dist, summary })
    }

    /// The error distribution.
    pub fn dist(&self) -> &ErrorDistribution {
        &self.dist
    }

    /// The design summary.
    pub fn summary(&self) -> &DesignSummary {
        &self.summary
    }

    /// The covariance function
    ///
    /// 𝒱(x,z) = σ²F′(x)F′(z)(x_fᵀA⁻¹x_f + 1 − 2x_fᵀA⁻¹b̄)
    ///          − (F′(x)H(z) + F′(z)H(x))(x_fᵀA⁻¹b̄ − 1)
    ///          + F(min(x,z)) − F(x)F(z).
    pub fn variance_v(&self, x: f64, z: f64) -> f64 {
        let fx = self.dist.density(x).expect("analytic by construction");
        let fz = self.dist.density(z).expect("analytic by construction");
        let quad_aa = self.summary.quad_aa();
        let quad_ab = self.summary.quad_ab();
        let sigma_sq = self.dist.variance();
        sigma_sq * fx * fz * (quad_aa + 1.0 - 2.0 * quad_ab)
            - (fx * self.dist.h(z) + fz * self.dist.h(x)) * (quad_ab - 1.0)
            + self.dist.cdf(x.min(z))
            - self.dist.cdf(x) * self.dist.cdf(z)
    }

    /// The asymptotic variance of the two-sided coverage error process:
    /// 𝒰(x) = 𝒱(x,x) + 𝒱(−x,−x) − 2𝒱(x,−x), for x > 0.
    ///
    /// Rounding can push a mathematically non-negative result a hair below
    /// zero; values in (−1e-10, 0) are clamped to 0, anything lower is an
    /// assumption violation and reported as an error.
    pub fn u_function(&self, x: f64) -> Result<f64> {
        assert!(x > 0.0, "u_function requires x > 0, got {x}");
        let u = self.variance_v(x, x) + self.variance_v(-x, -x) - 2.0 * self.variance_v(x, -x);
        if u <= -1e-10 {
            return Err(Error::NonPositiveVariance { x, value: u });
        }
        Ok(u.max(0.0))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::empirical::{uniform_open01, RngStream};
    use crate::model::{design_summary, Dataset};
    use nalgebra::{DMatrix, DVector};

    fn assert_close(got: f64, want: f64, tol: f64) {
        assert!(
            (got - want).abs() <= tol,
            "got {got}, want {want} (diff {})",
            (got - want).abs()
        );
    }

    fn intercept_only_context(dist: ErrorDistribution, n: usize) -> TheoryContext {
        let x = DMatrix::from_element(n, 1, 1.0);
        let y = DVector::zeros(n);
        let data = Dataset::new(x, y).unwrap();
        let summary = design_summary(&data, &[1.0]).unwrap();
        TheoryContext::new(dist, summary).unwrap()
    }

    fn random_context(seed: u64) -> TheoryContext {
        let mut rng = RngStream::new(seed, 0).rng();
        let n = 80;
        let p = 3;
        let x = DMatrix::from_fn(n, p, |_, j| {
            if j == 0 {
                1.0
            } else {
                crate::special::normal_quantile(uniform_open01(&mut rng))
            }
        });
        let data = Dataset::new(x, DVector::zeros(n)).unwrap();
        let summary = design_summary(&data, &[1.0, 0.4, -0.2]).unwrap();
        TheoryContext::new(ErrorDistribution::normal(1.1).unwrap(), summary).unwrap()
    }

    #[test]
    fn rejects_empirical_distributions() {
        let sample = crate::empirical::Sample::new(vec![-1.0, 1.0]).unwrap();
        let x = DMatrix::from_element(4, 1, 1.0);
        let data = Dataset::new(x, DVector::zeros(4)).unwrap();
        let summary = design_summary(&data, &[1.0]).unwrap();
        let dist = ErrorDistribution::empirical(sample).unwrap();
        assert!(TheoryContext::new(dist, summary).is_err());
    }

    #[test]
    fn variance_v_is_symmetric() {
        let ctx = random_context(17);
        let mut rng = RngStream::new(18, 0).rng();
        for _ in 0..50 {
            let x = 6.0 * (uniform_open01(&mut rng) - 0.5);
            let z = 6.0 * (uniform_open01(&mut rng) - 0.5);
            let a = ctx.variance_v(x, z);
            let b = ctx.variance_v(z, x);
            assert_close(a, b, 1e-14);
        }
    }

    #[test]
    fn variance_v_vanishes_in_the_far_tail() {
        let ctx = random_context(5);
        assert_close(ctx.variance_v(50.0, 50.0), 0.0, 1e-12);
        assert_close(ctx.variance_v(-50.0, -50.0), 0.0, 1e-12);
        assert_close(ctx.variance_v(50.0, -50.0), 0.0, 1e-12);
    }

    #[test]
    fn intercept_only_design_reduces_to_brownian_bridge_covariance() {
        // With A = b̄ = x_f = 1 both design-dependent terms vanish, leaving
        // F(min) − F(x)F(z).
        let dist = ErrorDistribution::normal(1.0).unwrap();
        let ctx = intercept_only_context(dist.clone(), 25);
        for (x, z) in [(0.3_f64, 0.3_f64), (-1.0, 0.5), (1.7, -2.2), (2.0, 1.0)] {
            let want = dist.cdf(x.min(z)) - dist.cdf(x) * dist.cdf(z);
            assert_close(ctx.variance_v(x, z), want, 1e-12);
        }
    }

    #[test]
    fn u_matches_its_definition_and_closed_form() {
        let ctx = intercept_only_context(ErrorDistribution::normal(1.0).unwrap(), 30);
        let x = 1.96;
        let want =
            ctx.variance_v(x, x) + ctx.variance_v(-x, -x) - 2.0 * ctx.variance_v(x, -x);
        assert_close(ctx.u_function(x).unwrap(), want, 1e-14);
        // Intercept-only symmetric case: 𝒰(x) = G(x)(1 − G(x)) with
        // G(x) = P(|ε| ≤ x).
        let g = 2.0 * crate::special::normal_cdf(x) - 1.0;
        assert_close(ctx.u_function(x).unwrap(), g * (1.0 - g), 1e-12);
        assert_close(
            ctx.u_function(1.959_963_984_540_054).unwrap(),
            0.0475,
            1e-6,
        );
    }

    #[test]
    fn u_is_positive_on_the_working_range_and_vanishes_at_infinity() {
        for dist in [
            ErrorDistribution::normal(1.0).unwrap(),
            ErrorDistribution::laplace(1.0 / 2.0_f64.sqrt()).unwrap(),
        ] {
            let sigma = dist.variance().sqrt();
            let ctx = intercept_only_context(dist.clone(), 40);
            let mut step = 0.05_f64;
            while step <= 6.0 {
                let u = ctx.u_function(step * sigma).unwrap();
                assert!(u > 0.0, "U({step}σ) = {u} not positive for {dist:?}");
                step += 0.05;
            }
            assert_close(ctx.u_function(80.0).unwrap(), 0.0, 1e-12);
        }
        let skewed = random_context(99);
        for x in [0.2, 0.9, 1.9, 3.4] {
            assert!(skewed.u_function(x).unwrap() > 0.0);
        }
    }

    #[test]
    fn gram_matrices_are_positive_semidefinite() {
        let contexts = [
            random_context(1),
            random_context(2),
            intercept_only_context(ErrorDistribution::laplace(0.9).unwrap(), 50),
        ];
        let mut rng = RngStream::new(77, 0).rng();
        for ctx in &contexts {
            for _ in 0..20 {
                let r = 2 + (uniform_open01(&mut rng) * 5.0) as usize;
                let grid: Vec<f64> =
                    (0..r).map(|_| 8.0 * (uniform_open01(&mut rng) - 0.5)).collect();
                let gram = DMatrix::from_fn(r, r, |i, j| ctx.variance_v(grid[i], grid[j]));
                let eigen = gram.symmetric_eigenvalues();
                let min = eigen.iter().copied().fold(f64::INFINITY, f64::min);
                assert!(min >= -1e-8, "min eigenvalue {min} for grid {grid:?}");
            }
        }
    }
}
