//! Monte Carlo harness: simulate many training sets, build each requested
//! interval, and measure realized conditional coverage and guarantee levels
//! (the Table-2 / Figure-2 style experiment).

use std::path::{Path, PathBuf};
use std::time::Instant;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::empirical::{quantile_sorted, RngStream, GENERATOR_ID};
use crate::intervals::{rb_interval, rbug_interval, BootstrapConfig, Method};
use crate::model::{fit_ols, Dataset};
use crate::special::normal_quantile;
use crate::theory::ErrorDistribution;
use crate::{Error, Result};

/// Width of the coverage histogram bins (0.25%).
const HISTOGRAM_BIN_WIDTH: f64 = 0.0025;

/// How the fixed design matrix is obtained.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DesignSpec {
    /// n×p i.i.d. standard normal entries, drawn once from this seed.
    StandardNormalIid {
        /// Seed for the design draw (separate from the replication seed).
        seed: u64,
    },
    /// Load the design from a CSV file (header row, p columns).
    FromFile {
        /// Path to the CSV file.
        path: PathBuf,
    },
}

/// Bootstrap replicate counts for the simulation (levels and seeds come
/// from the surrounding config).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BootstrapCounts {
    /// Number of prediction roots B.
    pub b_roots: usize,
    /// Outer adjustment replicates 𝓑₁.
    pub b_adjust: usize,
    /// Monte Carlo integration draws 𝓑₂.
    pub b_mc: usize,
}

impl Default for BootstrapCounts {
    fn default() -> Self {
        Self { b_roots: 2500, b_adjust: 2500, b_mc: 2500 }
    }
}

fn default_quantile_probs() -> Vec<f64> {
    vec![0.25, 0.45, 0.65, 0.85]
}

/// Full description of one simulation experiment (JSON-serializable).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimConfig {
    /// Observations per simulated data set.
    pub n: usize,
    /// True coefficient vector (length p).
    pub beta: Vec<f64>,
    /// Where the fixed design comes from.
    pub design: DesignSpec,
    /// Replace the first design column with ones (intercept) after
    /// generation/loading.
    #[serde(default)]
    pub intercept_column: bool,
    /// Prediction point (length p).
    pub xf: Vec<f64>,
    /// Error distribution.
    pub dist: ErrorDistribution,
    /// Interval methods to evaluate.
    pub methods: Vec<Method>,
    /// Nominal miscoverage α.
    pub alpha: f64,
    /// One minus the guarantee target, γ.
    pub gamma: f64,
    /// Number of simulated data sets R.
    pub replications: usize,
    /// Bootstrap replicate counts.
    #[serde(default)]
    pub bootstrap: BootstrapCounts,
    /// Probabilities at which coverage quantiles are reported.
    #[serde(default = "default_quantile_probs")]
    pub coverage_quantile_probs: Vec<f64>,
    /// Root seed for all replication randomness.
    pub master_seed: u64,
}

impl SimConfig {
    /// Number of regressors implied by `beta`.
    pub fn p(&self) -> usize {
        self.beta.len()
    }

    /// Validates every cross-field constraint.
    pub fn validate(&self) -> Result<()> {
        let p = self.p();
        if p == 0 {
            return Err(Error::InvalidConfig("beta must have at least one entry".into()));
        }
        if self.n <= p {
            return Err(Error::InvalidConfig(format!(
                "need n > p, got n = {} with p = {p}",
                self.n
            )));
        }
        if self.xf.len() != p {
            return Err(Error::InvalidConfig(format!(
                "xf has {} entries but beta has {p}",
                self.xf.len()
            )));
        }
        if !self.xf.iter().chain(self.beta.iter()).all(|v| v.is_finite()) {
            return Err(Error::InvalidConfig("beta and xf must be finite".into()));
        }
        for (name, v) in [("alpha", self.alpha), ("gamma", self.gamma)] {
            if !(v > 0.0 && v < 1.0) {
                return Err(Error::InvalidConfig(format!("{name} must be in (0,1), got {v}")));
            }
        }
        if self.replications == 0 {
            return Err(Error::InvalidConfig("replications must be positive".into()));
        }
        if self.bootstrap.b_roots == 0 || self.bootstrap.b_adjust == 0 || self.bootstrap.b_mc == 0
        {
            return Err(Error::InvalidConfig(
                "bootstrap replicate counts must be positive".into(),
            ));
        }
        if self.methods.is_empty() {
            return Err(Error::InvalidConfig("methods must not be empty".into()));
        }
        for (i, m) in self.methods.iter().enumerate() {
            if m.residual_type().is_none() {
                return Err(Error::InvalidConfig(format!(
                    "method {m} is a closed-form oracle, not a bootstrap method"
                )));
            }
            if self.methods[..i].contains(m) {
                return Err(Error::InvalidConfig(format!("duplicate method {m}")));
            }
        }
        if self.coverage_quantile_probs.is_empty() {
            return Err(Error::InvalidConfig(
                "coverage_quantile_probs must not be empty".into(),
            ));
        }
        let mut prev = 0.0;
        for &q in &self.coverage_quantile_probs {
            if !(q > 0.0 && q < 1.0) {
                return Err(Error::InvalidConfig(format!(
                    "coverage quantile probs must be in (0,1), got {q}"
                )));
            }
            if q <= prev {
                return Err(Error::InvalidConfig(
                    "coverage quantile probs must be strictly ascending".into(),
                ));
            }
            prev = q;
        }
        self.dist.validate()
    }
}

/// One reported quantile of the coverage distribution.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuantilePoint {
    /// Probability level.
    pub prob: f64,
    /// Coverage quantile at that level.
    pub value: f64,
}

/// Per-method results, or the failure that aborted the method.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum MethodOutcome {
    /// All replications succeeded.
    Completed {
        /// Fraction of replications with conditional coverage ≥ 1−α.
        guarantee_level: f64,
        /// Mean interval half-width across replications.
        mean_half_width: f64,
        /// Replications where the adjusted level was clipped.
        clipped_replications: usize,
        /// Coverage quantiles at the configured probabilities.
        coverage_quantiles: Vec<QuantilePoint>,
        /// Conditional coverage per replication, in replication order.
        coverages: Vec<f64>,
    },
    /// Some replication failed; the method was aborted.
    Failed {
        /// The first error encountered.
        error: String,
    },
}

/// Results for one method.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodReport {
    /// The interval method.
    pub method: Method,
    /// Outcome (results or failure).
    #[serde(flatten)]
    pub outcome: MethodOutcome,
}

/// Everything a simulation run produces.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationReport {
    /// Echo of the configuration that produced this report.
    pub config: SimConfig,
    /// Pseudo-random generator family.
    pub generator: String,
    /// Wall-clock duration of the run in seconds (excluded from
    /// reproducibility comparisons).
    pub wall_time_seconds: f64,
    /// Per-method results, in configuration order.
    pub methods: Vec<MethodReport>,
}

/// Exact conditional coverage F(δ+c) − F(δ−c) of a symmetric interval of
/// half-width `c` when the point prediction is off by `delta`.
pub fn conditional_coverage(dist: &ErrorDistribution, delta: f64, c: f64) -> f64 {
    assert!(c >= 0.0, "half-width must be nonnegative, got {c}");
    dist.cdf(delta + c) - dist.cdf(delta - c)
}

/// The fixed i.i.d. standard-normal design used by the experiment model,
/// drawn row-major from its own seed so the same experiment can be repeated
/// with different error seeds.
pub fn generate_experiment_design(p: usize, n: usize, seed: u64) -> DMatrix<f64> {
    assert!(n > p && p >= 1, "need n > p >= 1, got n = {n}, p = {p}");
    let mut rng = RngStream::new(seed, 0).rng();
    DMatrix::from_row_iterator(
        n,
        p,
        (0..n * p).map(|_| normal_quantile(crate::empirical::uniform_open01(&mut rng))),
    )
}

/// Empirical quantiles of the realized coverages at each probability.
pub fn coverage_quantiles(coverages: &[f64], probs: &[f64]) -> Result<Vec<f64>> {
    if coverages.is_empty() {
        return Err(Error::Data("cannot take quantiles of an empty coverage vector".into()));
    }
    let mut sorted = coverages.to_vec();
    sorted.sort_by(f64::total_cmp);
    probs.iter().map(|&p| quantile_sorted(&sorted, p)).collect()
}

struct RepRecord {
    coverage: f64,
    half_width: f64,
    clipped: bool,
}

/// Runs the full experiment described by `cfg`.
pub fn run_experiment(cfg: &SimConfig) -> Result<SimulationReport> {
    cfg.validate()?;
    let start = Instant::now();
    let n = cfg.n;
    let p = cfg.p();

    let mut x = match &cfg.design {
        DesignSpec::StandardNormalIid { seed } => generate_experiment_design(p, n, *seed),
        DesignSpec::FromFile { path } => {
            let x = crate::io::read_design_csv(path)?;
            if x.shape() != (n, p) {
                return Err(Error::DimensionMismatch {
                    context: format!(
                        "design file {} is {}×{}, config wants {n}×{p}",
                        path.display(),
                        x.nrows(),
                        x.ncols()
                    ),
                });
            }
            x
        }
    };
    if cfg.intercept_column {
        x.column_mut(0).fill(1.0);
    }

    let beta = DVector::from_column_slice(&cfg.beta);
    let x_beta = &x * &beta;
    let true_center: f64 = cfg.xf.iter().zip(cfg.beta.iter()).map(|(a, b)| a * b).sum();
    let master = RngStream::new(cfg.master_seed, 0);

    let method_cfgs: Vec<BootstrapConfig> = cfg
        .methods
        .iter()
        .map(|m| BootstrapConfig {
            b_roots: cfg.bootstrap.b_roots,
            b_adjust: cfg.bootstrap.b_adjust,
            b_mc: cfg.bootstrap.b_mc,
            alpha: cfg.alpha,
            gamma: cfg.gamma,
            residual_type: m.residual_type().expect("validated as bootstrap method"),
            seed: cfg.master_seed,
        })
        .collect();

    let per_rep: Vec<Vec<std::result::Result<RepRecord, String>>> = (0..cfg.replications
        as u64)
        .into_par_iter()
        .map(|r| {
            let rep_stream = master.child(r);
            let mut rng = rep_stream.child(0).rng();
            let errors = cfg.dist.sample_vec(n, &mut rng);
            let y = DVector::from_fn(n, |i, _| x_beta[i] + errors[i]);
            let fit = match Dataset::new(x.clone(), y).and_then(fit_ols) {
                Ok(fit) => fit,
                Err(e) => {
                    return cfg.methods.iter().map(|_| Err(e.to_string())).collect();
                }
            };
            let delta = match fit.predict(&cfg.xf) {
                Ok(pred) => pred - true_center,
                Err(e) => return cfg.methods.iter().map(|_| Err(e.to_string())).collect(),
            };
            cfg.methods
                .iter()
                .zip(&method_cfgs)
                .map(|(method, bcfg)| {
                    let stream = rep_stream.child(1 + method.stream_offset());
                    let interval = if method.is_adjusted() {
                        rbug_interval(&fit, &cfg.xf, bcfg, stream)
                    } else {
                        rb_interval(&fit, &cfg.xf, bcfg, stream)
                    };
                    interval
                        .map(|iv| RepRecord {
                            coverage: conditional_coverage(&cfg.dist, delta, iv.half_width),
                            half_width: iv.half_width,
                            clipped: iv.level_clipped,
                        })
                        .map_err(|e| e.to_string())
                })
                .collect()
        })
        .collect();

    let mut methods = Vec::with_capacity(cfg.methods.len());
    for (mi, &method) in cfg.methods.iter().enumerate() {
        let outcome = match per_rep.iter().find_map(|rep| rep[mi].as_ref().err()) {
            Some(error) => MethodOutcome::Failed { error: error.clone() },
            None => {
                let records: Vec<&RepRecord> =
                    per_rep.iter().map(|rep| rep[mi].as_ref().unwrap()).collect();
                let coverages: Vec<f64> = records.iter().map(|rec| rec.coverage).collect();
                let r = coverages.len() as f64;
                let guarantee_level =
                    coverages.iter().filter(|&&c| c >= 1.0 - cfg.alpha).count() as f64 / r;
                let mean_half_width =
                    records.iter().map(|rec| rec.half_width).sum::<f64>() / r;
                let clipped_replications = records.iter().filter(|rec| rec.clipped).count();
                let values = coverage_quantiles(&coverages, &cfg.coverage_quantile_probs)?;
                let coverage_quantiles = cfg
                    .coverage_quantile_probs
                    .iter()
                    .zip(values)
                    .map(|(&prob, value)| QuantilePoint { prob, value })
                    .collect();
                MethodOutcome::Completed {
                    guarantee_level,
                    mean_half_width,
                    clipped_replications,
                    coverage_quantiles,
                    coverages,
                }
            }
        };
        methods.push(MethodReport { method, outcome });
    }

    Ok(SimulationReport {
        config: cfg.clone(),
        generator: GENERATOR_ID.to_string(),
        wall_time_seconds: start.elapsed().as_secs_f64(),
        methods,
    })
}

impl SimulationReport {
    /// Pretty JSON with a trailing newline; parsing and re-serializing
    /// reproduces the bytes exactly.
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    /// Flat CSV (method, metric, value) for spreadsheet import.
    pub fn flat_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["method", "metric", "value"]).expect("csv record");
        for m in &self.methods {
            let name = m.method.as_str();
            match &m.outcome {
                MethodOutcome::Completed {
                    guarantee_level,
                    mean_half_width,
                    clipped_replications,
                    coverage_quantiles,
                    ..
                } => {
                    let mut write = |metric: String, value: String| {
                        w.write_record([name, &metric, &value]).expect("csv record");
                    };
                    write("guarantee_level".into(), guarantee_level.to_string());
                    write("mean_half_width".into(), mean_half_width.to_string());
                    write("clipped_replications".into(), clipped_replications.to_string());
                    for q in coverage_quantiles {
                        write(format!("coverage_quantile_{}", q.prob), q.value.to_string());
                    }
                }
                MethodOutcome::Failed { error } => {
                    w.write_record([name, "error", error]).expect("csv record");
                }
            }
        }
        String::from_utf8(w.into_inner().expect("csv buffer")).expect("csv is utf8")
    }

    /// Histogram CSV (method, bin_low, bin_high, count) over [0, 1] in
    /// 0.25% bins; coverage exactly 1 lands in the last bin.
    pub fn histogram_csv(&self) -> String {
        let bins = (1.0 / HISTOGRAM_BIN_WIDTH).round() as usize;
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["method", "bin_low", "bin_high", "count"]).expect("csv record");
        for m in &self.methods {
            let MethodOutcome::Completed { coverages, .. } = &m.outcome else {
                continue;
            };
            let mut counts = vec![0_u64; bins];
            for &c in coverages {
                let idx = ((c / HISTOGRAM_BIN_WIDTH) as usize).min(bins - 1);
                counts[idx] += 1;
            }
            for (i, count) in counts.iter().enumerate() {
                w.write_record([
                    m.method.as_str(),
                    &format!("{:.4}", i as f64 * HISTOGRAM_BIN_WIDTH),
                    &format!("{:.4}", (i + 1) as f64 * HISTOGRAM_BIN_WIDTH),
                    &count.to_string(),
                ])
                .expect("csv record");
            }
        }
        String::from_utf8(w.into_inner().expect("csv buffer")).expect("csv is utf8")
    }

    /// One-screen summary in the layout of the paper's results table:
    /// coverage quantiles, guarantee level, and mean width per method.
    pub fn summary_table(&self) -> String {
        let mut out = String::new();
        let probs = &self.config.coverage_quantile_probs;
        out.push_str(&format!("{:<10}", "method"));
        for p in probs {
            out.push_str(&format!("{:>12}", format!("q{p}")));
        }
        out.push_str(&format!("{:>14}{:>14}\n", "guarantee", "mean_width"));
        for m in &self.methods {
            out.push_str(&format!("{:<10}", m.method.as_str()));
            match &m.outcome {
                MethodOutcome::Completed {
                    guarantee_level,
                    mean_half_width,
                    coverage_quantiles,
                    ..
                } => {
                    for q in coverage_quantiles {
                        out.push_str(&format!("{:>11.4}%", 100.0 * q.value));
                    }
                    out.push_str(&format!(
                        "{:>13.4}%{:>14.4}\n",
                        100.0 * guarantee_level,
                        mean_half_width
                    ));
                }
                MethodOutcome::Failed { error } => {
                    out.push_str(&format!("  FAILED: {error}\n"));
                }
            }
        }
        out
    }

    /// Writes report.json, report.csv, and histogram.csv into `dir`
    /// (created if needed).
    pub fn write_files(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir)?;
        std::fs::write(dir.join("report.json"), self.to_json())?;
        std::fs::write(dir.join("report.csv"), self.flat_csv())?;
        std::fs::write(dir.join("histogram.csv"), self.histogram_csv())?;
        Ok(())
    }
}
