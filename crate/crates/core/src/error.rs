//! Error type shared across the crate.

use thiserror::Error;

/// Everything that can go wrong while fitting models, resampling, or
/// evaluating the asymptotic theory.
#[derive(Debug, Error)]
pub enum Error {
    /// The design matrix has (numerically) linearly dependent columns.
    #[error("design matrix is rank deficient (min/max singular value ratio {ratio:.3e})")]
    RankDeficient {
        /// Ratio of smallest to largest singular value of the design.
        ratio: f64,
    },

    /// Mismatched dimensions between inputs.
    #[error("dimension mismatch: {context}")]
    DimensionMismatch {
        /// What was being combined when the mismatch was detected.
        context: String,
    },

    /// A leverage is so close to one that leave-one-out residuals blow up.
    #[error("leverage {value} at row {index} is too close to one for leave-one-out residuals")]
    LeverageOne {
        /// Row of the offending observation.
        index: usize,
        /// The leverage value itself.
        value: f64,
    },

    /// A probability level outside its admissible range.
    #[error("quantile level {value} outside (0, 1]")]
    AlphaOutOfRange {
        /// The offending level.
        value: f64,
    },

    /// The asymptotic variance came out non-positive beyond rounding slack.
    #[error("asymptotic variance at x = {x} is not positive (got {value:.3e})")]
    NonPositiveVariance {
        /// Evaluation point.
        x: f64,
        /// The computed variance.
        value: f64,
    },

    /// A NaN or infinity appeared where a finite number is required.
    #[error("non-finite value in {context}")]
    NonFinite {
        /// Where the value was found.
        context: String,
    },

    /// A configuration failed validation.
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    /// Malformed input data (CSV or JSON).
    #[error("malformed input: {0}")]
    Data(String),

    /// An underlying I/O failure.
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
