//! Bootstrap prediction intervals for ordinary least squares with a
//! controllable unconditional guarantee level.
//!
//! A nominal `1 - alpha` prediction interval for a future response covers
//! with probability `1 - alpha` only on average over training sets; the
//! probability that the *conditional* coverage (given the data) reaches
//! `1 - alpha` — the guarantee level — is typically far lower and decays as
//! the sample grows. This crate implements:
//!
//! * classical residual bootstrap intervals ([`intervals::rb_interval`]),
//!   with either fitted or leave-one-out (predictive) residual pools;
//! * guarantee-adjusted intervals ([`intervals::rbug_interval`]) that widen
//!   the classical interval by a bootstrap estimate of the coverage shortfall
//!   so the guarantee level is restored to `1 - gamma`;
//! * closed-form Gaussian oracles ([`theory::gaussian`]) for the known-σ
//!   intercept-only model, useful as exact references;
//! * the asymptotic variance machinery behind the adjustment
//!   ([`theory::TheoryContext`]), and a sampler for the finite-sample error
//!   process it approximates;
//! * a Monte Carlo harness ([`simulation`]) that measures realized
//!   conditional coverage and guarantee levels over many simulated data sets.
//!
//! All randomness flows through explicit [`empirical::RngStream`] values, so
//! every result is reproducible bit for bit at any thread count.

pub mod empirical;
pub mod error;
pub mod intervals;
pub mod io;
pub mod model;
pub mod simulation;
pub mod special;
pub mod theory;

pub use error::Error;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;
