//! Bootstrap prediction intervals: the classical residual bootstrap (with
//! fitted or leave-one-out residual pools) and the guarantee-adjusted
//! variants that widen the interval so its conditional coverage reaches the
//! nominal level with a prescribed unconditional probability.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::empirical::{quantile_sorted, RngStream};
use crate::model::FittedModel;
use crate::{Error, Result};

/// Which residual pool feeds the bootstrap.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ResidualType {
    /// Mean-centered fitted residuals.
    Fitted,
    /// Mean-centered leave-one-out residuals.
    Predictive,
}

/// Interval construction method.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    /// Residual bootstrap on fitted residuals.
    Rb,
    /// Residual bootstrap on leave-one-out residuals (model-free/model-based).
    Mfmb,
    /// Guarantee-adjusted bootstrap on fitted residuals.
    Rbug,
    /// Guarantee-adjusted bootstrap on leave-one-out residuals.
    Prbug,
    /// Closed-form Gaussian known-σ interval with the χ²₁ guarantee
    /// correction (the §2-style oracle, not a bootstrap method).
    GaussianCorrected,
}

impl Method {
    /// The residual pool backing the bootstrap methods; `None` for the
    /// closed-form oracle.
    pub fn residual_type(self) -> Option<ResidualType> {
        match self {
            Self::Rb | Self::Rbug => Some(ResidualType::Fitted),
            Self::Mfmb | Self::Prbug => Some(ResidualType::Predictive),
            Self::GaussianCorrected => None,
        }
    }

    /// Whether the method applies the guarantee adjustment.
    pub fn is_adjusted(self) -> bool {
        matches!(self, Self::Rbug | Self::Prbug)
    }

    /// Stable lowercase name (serde tag, CLI value, CSV label).
    pub fn as_str(self) -> &'static str {
        match self {
            Self::Rb => "rb",
            Self::Mfmb => "mfmb",
            Self::Rbug => "rbug",
            Self::Prbug => "prbug",
            Self::GaussianCorrected => "gaussian_corrected",
        }
    }

    /// Fixed per-method stream id used by the simulation harness.
    pub(crate) fn stream_offset(self) -> u64 {
        match self {
            Self::Rb => 0,
            Self::Mfmb => 1,
            Self::Rbug => 2,
            Self::Prbug => 3,
            Self::GaussianCorrected => 4,
        }
    }
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Bootstrap tuning: replicate counts, levels, residual pool, and seed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BootstrapConfig {
    /// Number of prediction roots B.
    pub b_roots: usize,
    /// Outer replicates for the quantile adjustment (𝓑₁).
    pub b_adjust: usize,
    /// Monte Carlo integration draws per outer replicate (𝓑₂).
    pub b_mc: usize,
    /// Miscoverage level α of the nominal 1−α interval.
    pub alpha: f64,
    /// One minus the target guarantee level (adjusted methods aim for
    /// conditional coverage ≥ 1−α with probability 1−γ).
    pub gamma: f64,
    /// Residual pool.
    pub residual_type: ResidualType,
    /// Root seed for all bootstrap streams.
    pub seed: u64,
}

impl Default for BootstrapConfig {
    fn default() -> Self {
        Self {
            b_roots: 2500,
            b_adjust: 2500,
            b_mc: 2500,
            alpha: 0.05,
            gamma: 0.15,
            residual_type: ResidualType::Fitted,
            seed: 0,
        }
    }
}

impl BootstrapConfig {
    /// Checks counts are positive and levels strictly interior.
    pub fn validate(&self) -> Result<()> {
        if self.b_roots == 0 || self.b_adjust == 0 || self.b_mc == 0 {
            return Err(Error::InvalidConfig(
                "bootstrap replicate counts must be positive".into(),
            ));
        }
        for (name, v) in [("alpha", self.alpha), ("gamma", self.gamma)] {
            if !(v > 0.0 && v < 1.0) {
                return Err(Error::InvalidConfig(format!("{name} must be in (0,1), got {v}")));
            }
        }
        Ok(())
    }

    /// The stream all interval randomness derives from.
    pub fn stream(&self) -> RngStream {
        RngStream::new(self.seed, 0)
    }
}

/// A symmetric prediction interval around the point prediction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PredictionInterval {
    /// Point prediction x_fᵀβ̂.
    pub center: f64,
    /// Half-width; always ≥ 0.
    pub half_width: f64,
    /// center − half_width.
    pub lower: f64,
    /// center + half_width.
    pub upper: f64,
    /// Nominal miscoverage α.
    pub nominal_alpha: f64,
    /// One minus the guarantee target, when the method has one.
    pub nominal_gamma: Option<f64>,
    /// Quantile level actually applied to the |root| distribution:
    /// 1−α for unadjusted methods, clip(1−α+d̂/√n, 1/B, 1) for adjusted.
    pub adjusted_level: f64,
    /// Construction method.
    pub method: Method,
    /// The guarantee adjustment d̂*₁₋γ, when one was computed.
    pub d_hat: Option<f64>,
    /// True when the adjusted level had to be clipped into [1/B, 1].
    pub level_clipped: bool,
}

impl PredictionInterval {
    fn new_symmetric(center: f64, half_width: f64) -> (f64, f64) {
        (center - half_width, center + half_width)
    }
}

/// The residual pool for a given type.
fn residual_pool(model: &FittedModel, residual_type: ResidualType) -> Result<&[f64]> {
    match residual_type {
        ResidualType::Fitted => Ok(model.centered_residuals()),
        ResidualType::Predictive => model.predictive_residuals(),
    }
}

/// Draws the B bootstrap prediction roots δ*_b = ε*_f − wᵀε*, where w are
/// the prediction weights at x_f: each replicate resamples n pool values
/// for the refit shift and one more for the future error, exactly the
/// classical residual-bootstrap root y*_f − x_fᵀβ̂* recentred at x_fᵀβ̂.
pub fn bootstrap_roots(
    model: &FittedModel,
    xf: &[f64],
    cfg: &BootstrapConfig,
    stream: RngStream,
) -> Result<Vec<f64>> {
    cfg.validate()?;
    let weights = model.prediction_weights(xf)?;
    let weights = weights.as_slice();
    let pool = residual_pool(model, cfg.residual_type)?;
    let n = model.n();
    let roots = (0..cfg.b_roots as u64)
        .into_par_iter()
        .map(|b| {
            let mut rng = stream.child(b).rng();
            let mut shift = 0.0;
            for &w in weights.iter().take(n) {
                shift += w * pool[rng.random_range(0..n)];
            }
            let future = pool[rng.random_range(0..n)];
            future - shift
        })
        .collect();
    Ok(roots)
}

/// Classical residual-bootstrap interval: half-width is the 1−α empirical
/// quantile of |δ*|. Method is RB for the fitted pool, MF/MB for the
/// leave-one-out pool.
pub fn rb_interval(
    model: &FittedModel,
    xf: &[f64],
    cfg: &BootstrapConfig,
    stream: RngStream,
) -> Result<PredictionInterval> {
    let roots = bootstrap_roots(model, xf, cfg, stream.child(0))?;
    let mut abs_roots: Vec<f64> = roots.iter().map(|r| r.abs()).collect();
    abs_roots.sort_by(f64::total_cmp);
    let half_width = quantile_sorted(&abs_roots, 1.0 - cfg.alpha)?;
    let center = model.predict(xf)?;
    let (lower, upper) = PredictionInterval::new_symmetric(center, half_width);
    Ok(PredictionInterval {
        center,
        half_width,
        lower,
        upper,
        nominal_alpha: cfg.alpha,
        nominal_gamma: None,
        adjusted_level: 1.0 - cfg.alpha,
        method: match cfg.residual_type {
            ResidualType::Fitted => Method::Rb,
            ResidualType::Predictive => Method::Mfmb,
        },
        d_hat: None,
        level_clipped: false,
    })
}

/// The scaled coverage-gap statistic
/// p* = √n·( (1/n)Σᵢ 1{|e*ᵢ| ≤ ĉ} − (1/𝓑₂)Σ_b 1{|ζ*_b| ≤ ĉ} ),
/// comparing the pool's in-sample coverage of [−ĉ, ĉ] against the
/// bootstrap-world coverage of the prediction root.
pub fn prediction_gap_statistic(errors: &[f64], zetas: &[f64], c_hat: f64) -> f64 {
    assert!(!errors.is_empty() && !zetas.is_empty());
    let in_pool =
        errors.iter().filter(|e| e.abs() <= c_hat).count() as f64 / errors.len() as f64;
    let in_roots =
        zetas.iter().filter(|z| z.abs() <= c_hat).count() as f64 / zetas.len() as f64;
    (errors.len() as f64).sqrt() * (in_pool - in_roots)
}

/// Bootstrap estimate d̂*₁₋γ of the 1−γ quantile of the coverage error
/// process at ĉ: each outer replicate draws a pool sample e*, recomputes
/// the bootstrap-world roots ζ* = ε* − wᵀe* + mean(e*) by 𝓑₂-draw Monte
/// Carlo, and evaluates the gap statistic; the (1−γ) empirical quantile of
/// those gaps is returned.
pub fn guarantee_adjustment(
    model: &FittedModel,
    xf: &[f64],
    c_hat: f64,
    cfg: &BootstrapConfig,
    stream: RngStream,
) -> Result<f64> {
    cfg.validate()?;
    let weights = model.prediction_weights(xf)?;
    let weights = weights.as_slice();
    let pool = residual_pool(model, cfg.residual_type)?;
    let n = model.n();
    let sqrt_n = (n as f64).sqrt();
    let outer = stream.child(1);
    let integration = stream.child(2);
    let mut gaps: Vec<f64> = (0..cfg.b_adjust as u64)
        .into_par_iter()
        .map(|b1| {
            let mut rng_e = outer.child(b1).rng();
            let mut in_pool = 0_usize;
            let mut sum = 0.0;
            let mut shift = 0.0;
            for &w in weights.iter().take(n) {
                let e = pool[rng_e.random_range(0..n)];
                if e.abs() <= c_hat {
                    in_pool += 1;
                }
                sum += e;
                shift += w * e;
            }
            let offset = sum / n as f64 - shift;
            let mut rng_z = integration.child(b1).rng();
            let mut in_roots = 0_usize;
            for _ in 0..cfg.b_mc {
                let zeta = pool[rng_z.random_range(0..n)] + offset;
                if zeta.abs() <= c_hat {
                    in_roots += 1;
                }
            }
            sqrt_n * (in_pool as f64 / n as f64 - in_roots as f64 / cfg.b_mc as f64)
        })
        .collect();
    gaps.sort_by(f64::total_cmp);
    quantile_sorted(&gaps, 1.0 - cfg.gamma)
}

/// The quantile level for the adjusted interval: 1−α+d̂/√n clipped into
/// [1/B, 1] so an empirical quantile always exists. Returns the level and
/// whether clipping fired.
pub fn clip_adjusted_level(alpha: f64, d_hat: f64, n: usize, b_roots: usize) -> (f64, bool) {
    let raw = 1.0 - alpha + d_hat / (n as f64).sqrt();
    let floor = 1.0 / b_roots as f64;
    let clipped = !(floor..=1.0).contains(&raw);
    (raw.clamp(floor, 1.0), clipped)
}

/// Guarantee-adjusted bootstrap interval: computes the classical roots and
/// ĉ*₁₋α, estimates the adjustment d̂*₁₋γ, and re-reads the |root|
/// quantile at the adjusted level. Method is RBUG for the fitted pool,
/// PRBUG for the leave-one-out pool.
pub fn rbug_interval(
    model: &FittedModel,
    xf: &[f64],
    cfg: &BootstrapConfig,
    stream: RngStream,
) -> Result<PredictionInterval> {
    let roots = bootstrap_roots(model, xf, cfg, stream.child(0))?;
    let mut abs_roots: Vec<f64> = roots.iter().map(|r| r.abs()).collect();
    abs_roots.sort_by(f64::total_cmp);
    let c_hat = quantile_sorted(&abs_roots, 1.0 - cfg.alpha)?;
    let d_hat = guarantee_adjustment(model, xf, c_hat, cfg, stream)?;
    let (level, level_clipped) = clip_adjusted_level(cfg.alpha, d_hat, model.n(), cfg.b_roots);
    let half_width = quantile_sorted(&abs_roots, level)?;
    let center = model.predict(xf)?;
    let (lower, upper) = PredictionInterval::new_symmetric(center, half_width);
    Ok(PredictionInterval {
        center,
        half_width,
        lower,
        upper,
        nominal_alpha: cfg.alpha,
        nominal_gamma: Some(cfg.gamma),
        adjusted_level: level,
        method: match cfg.residual_type {
            ResidualType::Fitted => Method::Rbug,
            ResidualType::Predictive => Method::Prbug,
        },
        d_hat: Some(d_hat),
        level_clipped,
    })
}
