//! Mean-zero error distributions: analytic families for theory and
//! simulation, plus an empirical (plug-in) variant for resampling work.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::empirical::{uniform_open01, Sample};
use crate::special::{normal_cdf, normal_pdf, normal_quantile};
use crate::{Error, Result};

/// A centered error distribution.
///
/// `Normal` and `Laplace` carry closed-form CDF, density, and partial-moment
/// function; `Empirical` supports only plug-in CDF/partial moments, so the
/// asymptotic-variance formulas reject it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ErrorDistribution {
    /// N(0, sigma²).
    Normal {
        /// Standard deviation, σ > 0.
        sigma: f64,
    },
    /// Laplace with location 0; variance is 2·scale², so scale = 1/√2 gives
    /// unit variance.
    Laplace {
        /// Scale b > 0.
        scale: f64,
    },
    /// The empirical distribution of a centered sample.
    Empirical {
        /// The sample; mean must be (numerically) zero.
        sample: Sample,
    },
}

impl ErrorDistribution {
    /// Centered normal with standard deviation `sigma`.
    pub fn normal(sigma: f64) -> Result<Self> {
        let dist = Self::Normal { sigma };
        dist.validate()?;
        Ok(dist)
    }

    /// Centered Laplace with the given scale.
    pub fn laplace(scale: f64) -> Result<Self> {
        let dist = Self::Laplace { scale };
        dist.validate()?;
        Ok(dist)
    }

    /// Empirical distribution of `sample`, centered here so the mean-zero
    /// invariant holds regardless of the input.
    pub fn empirical(sample: Sample) -> Result<Self> {
        let mean = sample.mean();
        let centered: Vec<f64> = sample.values().iter().map(|v| v - mean).collect();
        let dist = Self::Empirical { sample: Sample::new(centered)? };
        dist.validate()?;
        Ok(dist)
    }

    /// Checks the parameter constraints (used directly after
    /// deserialization, where the constructors are bypassed).
    pub fn validate(&self) -> Result<()> {
        match self {
            Self::Normal { sigma } => {
                if !(sigma.is_finite() && *sigma > 0.0) {
                    return Err(Error::InvalidConfig(format!(
                        "normal errors need sigma > 0, got {sigma}"
                    )));
                }
            }
            Self::Laplace { scale } => {
                if !(scale.is_finite() && *scale > 0.0) {
                    return Err(Error::InvalidConfig(format!(
                        "laplace errors need scale > 0, got {scale}"
                    )));
                }
            }
            Self::Empirical { sample } => {
                let spread = sample.values().iter().fold(1.0_f64, |m, v| m.max(v.abs()));
                if sample.mean().abs() > 1e-9 * spread {
                    return Err(Error::InvalidConfig(format!(
                        "empirical errors must be centered (mean = {})",
                        sample.mean()
                    )));
                }
                if self.variance() <= 0.0 {
                    return Err(Error::InvalidConfig(
                        "empirical errors need positive variance".into(),
                    ));
                }
            }
        }
        Ok(())
    }

    /// True for the families with closed-form density (Normal, Laplace).
    pub fn is_analytic(&self) -> bool {
        !matches!(self, Self::Empirical { .. })
    }

    /// The variance σ².
    pub fn variance(&self) -> f64 {
        match self {
            Self::Normal { sigma } => sigma * sigma,
            Self::Laplace { scale } => 2.0 * scale * scale,
            Self::Empirical { sample } => {
                sample.values().iter().map(|v| v * v).sum::<f64>() / sample.len() as f64
            }
        }
    }

    /// Distribution function F(x).
    pub fn cdf(&self, x: f64) -> f64 {
        match self {
            Self::Normal { sigma } => normal_cdf(x / sigma),
            Self::Laplace { scale } => {
                if x < 0.0 {
                    0.5 * (x / scale).exp()
                } else {
                    1.0 - 0.5 * (-x / scale).exp()
                }
            }
            Self::Empirical { sample } => sample.ecdf(x),
        }
    }

    /// Density F′(x); `None` for the empirical kind.
    pub fn density(&self, x: f64) -> Option<f64> {
        match self {
            Self::Normal { sigma } => Some(normal_pdf(x / sigma) / sigma),
            Self::Laplace { scale } => Some(0.5 * (-x.abs() / scale).exp() / scale),
            Self::Empirical { .. } => None,
        }
    }

    /// Quantile function F⁻¹(p), p in (0, 1).
    pub fn quantile(&self, p: f64) -> Result<f64> {
        if !(p > 0.0 && p < 1.0) {
            return Err(Error::AlphaOutOfRange { value: p });
        }
        Ok(match self {
            Self::Normal { sigma } => sigma * normal_quantile(p),
            Self::Laplace { scale } => {
                if p <= 0.5 {
                    scale * (2.0 * p).ln()
                } else {
                    -scale * (2.0 * (1.0 - p)).ln()
                }
            }
            Self::Empirical { sample } => sample.quantile(p)?,
        })
    }

    /// One draw. Analytic kinds go through the inverse CDF on an open-(0,1)
    /// uniform; the empirical kind draws a sample value uniformly.
    pub fn sample<R: Rng>(&self, rng: &mut R) -> f64 {
        match self {
            Self::Normal { sigma } => sigma * normal_quantile(uniform_open01(rng)),
            Self::Laplace { scale } => {
                let u = uniform_open01(rng);
                if u <= 0.5 {
                    scale * (2.0 * u).ln()
                } else {
                    -scale * (2.0 * (1.0 - u)).ln()
                }
            }
            Self::Empirical { sample } => {
                sample.values()[rng.random_range(0..sample.len())]
            }
        }
    }

    /// `count` i.i.d. draws.
    pub fn sample_vec<R: Rng>(&self, count: usize, rng: &mut R) -> Vec<f64> {
        (0..count).map(|_| self.sample(rng)).collect()
    }

    /// Partial first moment H(x) = E[ε·1{ε ≤ x}]; H(±∞) = 0 since the mean
    /// is zero.
    pub fn h(&self, x: f64) -> f64 {
        match self {
            Self::Normal { sigma } => {
                // ∫_{-∞}^{x} z φ(z/σ)/σ dz = -σ·φ(x/σ).
                -sigma * normal_pdf(x / sigma)
            }
            Self::Laplace { scale } => {
                if x.is_infinite() {
                    return 0.0;
                }
                if x <= 0.0 {
                    0.5 * (x - scale) * (x / scale).exp()
                } else {
                    -0.5 * (x + scale) * (-x / scale).exp()
                }
            }
            Self::Empirical { sample } => {
                let m = sample.len() as f64;
                sample.values().iter().filter(|&&v| v <= x).sum::<f64>() / m
            }
        }
    }
}
