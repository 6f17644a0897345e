//! Empirical distributions, order-statistic quantiles, resampling, and
//! reproducible RNG streams.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Name of the pseudo-random generator backing [`RngStream`], recorded in
/// simulation reports so archived results stay interpretable.
pub const GENERATOR_ID: &str = "chacha8";

/// A finite, non-empty sample of real values.
///
/// Serializes as a plain JSON array; deserialization re-checks the
/// invariants (at least one value, all finite).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct Sample {
    values: Vec<f64>,
}

impl Sample {
    /// Wraps `values`, rejecting empty input and non-finite entries.
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::Data("sample must contain at least one value".into()));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite { context: "sample values".into() });
        }
        Ok(Self { values })
    }

    /// The underlying values, in insertion order.
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Number of values.
    pub fn len(&self) -> usize {
        self.values.len()
    }

    /// Always false; kept for interface completeness.
    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Arithmetic mean.
    pub fn mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.values.len() as f64
    }

    /// Empirical distribution function: the fraction of values ≤ `x`.
    ///
    /// Defined for any `x` including ±∞; right-continuous and monotone by
    /// construction.
    pub fn ecdf(&self, x: f64) -> f64 {
        let count = self.values.iter().filter(|&&v| v <= x).count();
        count as f64 / self.values.len() as f64
    }

    /// Empirical `alpha`-quantile: the ⌈m·alpha⌉-th order statistic
    /// (inf{x : ECDF(x) ≥ alpha}), with no interpolation.
    ///
    /// `alpha` must lie in (0, 1].
    pub fn quantile(&self, alpha: f64) -> Result<f64> {
        let mut sorted = self.values.clone();
        sorted.sort_by(f64::total_cmp);
        quantile_sorted(&sorted, alpha)
    }

    /// Draws `count` values i.i.d. uniformly from this sample, with
    /// replacement.
    pub fn resample<R: Rng>(&self, count: usize, rng: &mut R) -> Sample {
        let m = self.values.len();
        let values = (0..count).map(|_| self.values[rng.random_range(0..m)]).collect();
        Sample { values }
    }
}

impl TryFrom<Vec<f64>> for Sample {
    type Error = Error;

    fn try_from(values: Vec<f64>) -> Result<Self> {
        Sample::new(values)
    }
}

impl From<Sample> for Vec<f64> {
    fn from(sample: Sample) -> Self {
        sample.values
    }
}

/// Quantile of an already-sorted slice under the same convention as
/// [`Sample::quantile`].
pub fn quantile_sorted(sorted: &[f64], alpha: f64) -> Result<f64> {
    if !(alpha > 0.0 && alpha <= 1.0) {
        return Err(Error::AlphaOutOfRange { value: alpha });
    }
    Ok(sorted[order_index(sorted.len(), alpha) - 1])
}

/// The 1-based order-statistic index k = min{k : k/m ≥ alpha}.
///
/// Computed with the same f64 division used by the ECDF, so the quantile is
/// exactly the smallest order statistic whose ECDF value reaches `alpha`
/// even when ⌈m·alpha⌉ would round the wrong way in floating point (e.g.
/// m = 1000, alpha = 0.95, where m·alpha = 950.0000000000001).
fn order_index(m: usize, alpha: f64) -> usize {
    let mut k = ((m as f64 * alpha).ceil() as usize).clamp(1, m);
    while k > 1 && (k - 1) as f64 / m as f64 >= alpha {
        k -= 1;
    }
    while k < m && (k as f64) / (m as f64) < alpha {
        k += 1;
    }
    k
}

/// A named position in a reproducible tree of ChaCha8 random streams.
///
/// A stream is identified by the root `seed` plus a 64-bit `stream_id`;
/// [`RngStream::child`] derives sub-streams by mixing an index into the id,
/// so parallel work can give every replicate its own generator while whole
/// runs stay bit-reproducible at any thread count.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RngStream {
    seed: u64,
    stream_id: u64,
}

impl RngStream {
    /// Stream `stream_id` of the generator family seeded with `seed`.
    pub fn new(seed: u64, stream_id: u64) -> Self {
        Self { seed, stream_id }
    }

    /// The root seed.
    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// This stream's identifier.
    pub fn stream_id(&self) -> u64 {
        self.stream_id
    }

    /// Derives the `id`-th sub-stream. Distinct paths through the tree map
    /// to distinct 64-bit stream ids up to the collision probability of the
    /// splitmix64 mixer.
    pub fn child(&self, id: u64) -> Self {
        let mixed = splitmix64(self.stream_id ^ splitmix64(id.wrapping_add(0x9E37_79B9_7F4A_7C15)));
        Self { seed: self.seed, stream_id: mixed }
    }

    /// Instantiates the generator positioned at this stream.
    pub fn rng(&self) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(self.stream_id);
        rng
    }
}

/// splitmix64 finalizer: a fixed bijection on u64 with good avalanche.
fn splitmix64(z: u64) -> u64 {
    let z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    let z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// A uniform draw from the open interval (0, 1), never exactly 0 or 1, so
/// it is safe to push through unbounded inverse CDFs.
pub fn uniform_open01<R: Rng>(rng: &mut R) -> f64 {
    ((rng.next_u64() >> 11) as f64 + 0.5) * (1.0 / 9_007_199_254_740_992.0)
}
