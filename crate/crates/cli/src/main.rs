//! Command-line front end: fit linear models from CSV, build bootstrap
//! prediction intervals, print Gaussian closed-form oracles, run seeded
//! simulation experiments, and diagnose the bootstrap error process.
//!
//! Exit codes: 0 success, 2 usage error, 3 data/config error, 4 numeric
//! error (rank deficiency, leverage one, non-finite values, …).

use std::path::PathBuf;

use anyhow::Context;
use clap::{Args, Parser, Subcommand, ValueEnum};
use guarantee_pi_core::empirical::RngStream;
use guarantee_pi_core::intervals::{rb_interval, rbug_interval, BootstrapConfig, Method};
use guarantee_pi_core::io::read_dataset_csv;
use guarantee_pi_core::model::{design_summary, fit_ols, Dataset};
use guarantee_pi_core::simulation::{generate_experiment_design, run_experiment, SimConfig};
use guarantee_pi_core::special::normal_quantile;
use guarantee_pi_core::theory::{
    correction_c, naive_guarantee, sample_error_process, ErrorDistribution, TheoryContext,
};
use guarantee_pi_core::Error;

#[derive(Parser)]
#[command(
    name = "guarantee-pi",
    version,
    about = "Bootstrap prediction intervals for linear models with a controllable guarantee level"
)]
struct Cli {
    /// Worker threads (default: all cores; env GUARANTEE_PI_THREADS as fallback).
    #[arg(long, global = true)]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Fit a linear model to CSV data and print a summary.
    Fit(FitArgs),
    /// Build a bootstrap prediction interval for a new regressor point.
    Predict(PredictArgs),
    /// Print the closed-form Gaussian oracle quantities.
    Oracle(OracleArgs),
    /// Run a simulation experiment described by a JSON config.
    Simulate(SimulateArgs),
    /// Sample the bootstrap error process and compare it to its Gaussian limit.
    Diagnose(DiagnoseArgs),
}

#[derive(Args)]
struct FitArgs {
    /// CSV file; header row, last column is the response.
    #[arg(long)]
    data: PathBuf,
    /// Prepend a column of ones to the design.
    #[arg(long)]
    intercept: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum MethodArg {
    Rb,
    Mfmb,
    Rbug,
    Prbug,
}

impl From<MethodArg> for Method {
    fn from(m: MethodArg) -> Self {
        match m {
            MethodArg::Rb => Method::Rb,
            MethodArg::Mfmb => Method::Mfmb,
            MethodArg::Rbug => Method::Rbug,
            MethodArg::Prbug => Method::Prbug,
        }
    }
}

#[derive(Args)]
struct PredictArgs {
    /// CSV file; header row, last column is the response.
    #[arg(long)]
    data: PathBuf,
    /// Prediction point, comma-separated (excluding the intercept one).
    #[arg(long, value_delimiter = ',', required = true)]
    xf: Vec<f64>,
    /// Interval method.
    #[arg(long, value_enum)]
    method: MethodArg,
    /// Nominal miscoverage level α.
    #[arg(long, default_value_t = 0.05, value_parser = parse_level)]
    alpha: f64,
    /// One minus the guarantee target, γ (adjusted methods only).
    #[arg(long, default_value_t = 0.15, value_parser = parse_level)]
    gamma: f64,
    /// Bootstrap prediction roots B.
    #[arg(long, default_value_t = 2500)]
    b: usize,
    /// Outer adjustment replicates.
    #[arg(long, default_value_t = 2500)]
    b1: usize,
    /// Inner Monte Carlo integration draws.
    #[arg(long, default_value_t = 2500)]
    b2: usize,
    /// Seed for all bootstrap randomness.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Prepend a column of ones to the design (and a 1 to --xf).
    #[arg(long)]
    intercept: bool,
}

#[derive(Args)]
struct OracleArgs {
    /// Nominal miscoverage level α.
    #[arg(long, default_value_t = 0.05, value_parser = parse_level)]
    alpha: f64,
    /// One minus the guarantee target, γ.
    #[arg(long, default_value_t = 0.15, value_parser = parse_level)]
    gamma: f64,
    /// Known error standard deviation.
    #[arg(long, default_value_t = 1.0, value_parser = parse_positive)]
    sigma: f64,
    /// Sample size.
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    n: u64,
    /// Quadratic form x_fᵀ(XᵀX/n)⁻¹x_f (1 for an intercept-only design).
    #[arg(long, default_value_t = 1.0, value_parser = parse_positive)]
    quad_aa: f64,
    /// Acknowledge that these formulas assume Gaussian errors with known σ.
    #[arg(long, required = true)]
    assume_gaussian: bool,
}

#[derive(Args)]
struct SimulateArgs {
    /// JSON experiment config.
    #[arg(long)]
    config: PathBuf,
    /// Output directory for report.json, report.csv, histogram.csv.
    #[arg(long)]
    out: PathBuf,
    /// Override the config's master_seed.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum DistArg {
    Normal,
    Laplace,
}

#[derive(Args)]
struct DiagnoseArgs {
    /// Observations in the simulated design.
    #[arg(long, default_value_t = 200, value_parser = clap::value_parser!(u64).range(2..))]
    n: u64,
    /// Regressors in the simulated design.
    #[arg(long, default_value_t = 2, value_parser = clap::value_parser!(u64).range(1..))]
    p: u64,
    /// Independent draws of the error process.
    #[arg(long, default_value_t = 1000, value_parser = clap::value_parser!(u64).range(1..))]
    draws: u64,
    /// Bootstrap replicates inside each draw.
    #[arg(long, default_value_t = 2000, value_parser = clap::value_parser!(u64).range(1..))]
    nested: u64,
    /// Error distribution.
    #[arg(long, value_enum, default_value_t = DistArg::Normal)]
    dist: DistArg,
    /// Standard deviation for --dist normal.
    #[arg(long, default_value_t = 1.0, value_parser = parse_positive)]
    sigma: f64,
    /// Scale for --dist laplace.
    #[arg(long, default_value_t = std::f64::consts::FRAC_1_SQRT_2, value_parser = parse_positive)]
    scale: f64,
    /// Positive evaluation points, comma-separated.
    #[arg(long, value_delimiter = ',', required = true)]
    x: Vec<f64>,
    /// Prediction point (default: 0.1·i for i = 0, …, p−1).
    #[arg(long, value_delimiter = ',')]
    xf: Option<Vec<f64>>,
    /// Replace the first design column with ones.
    #[arg(long)]
    intercept: bool,
    /// Seed for the process draws.
    #[arg(long)]
    seed: u64,
    /// Seed for the fixed design.
    #[arg(long, default_value_t = 1234)]
    design_seed: u64,
}

fn parse_level(s: &str) -> Result<f64, String> {
    let v: f64 = s.parse().map_err(|e| format!("{e}"))?;
    if v > 0.0 && v < 1.0 {
        Ok(v)
    } else {
        Err(format!("level must be strictly between 0 and 1, got {v}"))
    }
}

fn parse_positive(s: &str) -> Result<f64, String> {
    let v: f64 = s.parse().map_err(|e| format!("{e}"))?;
    if v.is_finite() && v > 0.0 {
        Ok(v)
    } else {
        Err(format!("value must be positive and finite, got {v}"))
    }
}

fn main() {
    let cli = Cli::parse();
    if let Err(err) = run(cli) {
        eprintln!("error: {err:#}");
        std::process::exit(exit_code(&err));
    }
}

/// 3 for data/config problems, 4 for numeric failures.
fn exit_code(err: &anyhow::Error) -> i32 {
    match err.downcast_ref::<Error>() {
        Some(
            Error::RankDeficient { .. }
            | Error::LeverageOne { .. }
            | Error::NonPositiveVariance { .. }
            | Error::NonFinite { .. }
            | Error::AlphaOutOfRange { .. },
        ) => 4,
        _ => 3,
    }
}

fn run(cli: Cli) -> anyhow::Result<()> {
    let threads = match cli.threads {
        Some(t) => Some(t),
        None => match std::env::var("GUARANTEE_PI_THREADS") {
            Ok(raw) => Some(raw.trim().parse::<usize>().map_err(|_| {
                Error::InvalidConfig(format!("GUARANTEE_PI_THREADS is not a thread count: {raw:?}"))
            })?),
            Err(_) => None,
        },
    };
    match threads {
        Some(0) => Err(Error::InvalidConfig("thread count must be positive".into()).into()),
        Some(t) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(t)
                .build()
                .map_err(|e| Error::InvalidConfig(format!("cannot build thread pool: {e}")))?;
            pool.install(|| dispatch(cli.command))
        }
        None => dispatch(cli.command),
    }
}

fn dispatch(command: Command) -> anyhow::Result<()> {
    match command {
        Command::Fit(args) => cmd_fit(args),
        Command::Predict(args) => cmd_predict(args),
        Command::Oracle(args) => cmd_oracle(args),
        Command::Simulate(args) => cmd_simulate(args),
        Command::Diagnose(args) => cmd_diagnose(args),
    }
}

fn cmd_fit(args: FitArgs) -> anyhow::Result<()> {
    let data = read_dataset_csv(&args.data, args.intercept)?;
    let model = fit_ols(data)?;
    let max_leverage = model.leverages().iter().cloned().fold(f64::MIN, f64::max);
    let summary = serde_json::json!({
        "n": model.n(),
        "p": model.p(),
        "beta_hat": model.beta_hat().as_slice(),
        "sigma_hat": model.sigma_hat_sq().sqrt(),
        "sigma_hat_sq": model.sigma_hat_sq(),
        "residual_mean": model.residual_mean(),
        "max_leverage": max_leverage,
    });
    println!("{}", serde_json::to_string_pretty(&summary)?);
    Ok(())
}

fn cmd_predict(args: PredictArgs) -> anyhow::Result<()> {
    let data = read_dataset_csv(&args.data, args.intercept)?;
    let model = fit_ols(data)?;
    let mut xf = args.xf.clone();
    if args.intercept {
        xf.insert(0, 1.0);
    }
    let method: Method = args.method.into();
    let config = BootstrapConfig {
        b_roots: args.b,
        b_adjust: args.b1,
        b_mc: args.b2,
        alpha: args.alpha,
        gamma: args.gamma,
        residual_type: method
            .residual_type()
            .expect("every CLI method resamples residuals"),
        seed: args.seed,
    };
    let interval = if method.is_adjusted() {
        rbug_interval(&model, &xf, &config, config.stream())?
    } else {
        rb_interval(&model, &xf, &config, config.stream())?
    };
    println!("{}", serde_json::to_string_pretty(&interval)?);
    Ok(())
}

fn cmd_oracle(args: OracleArgs) -> anyhow::Result<()> {
    let n = args.n as f64;
    let d = normal_quantile(1.0 - args.alpha / 2.0);
    let c = correction_c(args.alpha, args.gamma, args.quad_aa / n);
    println!("naive_guarantee {}", naive_guarantee(args.alpha));
    println!("c_1mgamma {c}");
    println!("p1_half_width {}", args.sigma * d);
    println!("p2_half_width {}", args.sigma * (d + c));
    Ok(())
}

fn cmd_simulate(args: SimulateArgs) -> anyhow::Result<()> {
    let text = std::fs::read_to_string(&args.config)
        .with_context(|| format!("reading {}", args.config.display()))?;
    let mut config: SimConfig = serde_json::from_str(&text)
        .map_err(|e| Error::InvalidConfig(format!("config does not match the schema: {e}")))?;
    if let Some(seed) = args.seed {
        config.master_seed = seed;
    }
    let report = run_experiment(&config)?;
    report.write_files(&args.out)?;
    print!("{}", report.summary_table());
    Ok(())
}

fn cmd_diagnose(args: DiagnoseArgs) -> anyhow::Result<()> {
    let (n, p) = (args.n as usize, args.p as usize);
    if n <= p {
        return Err(Error::InvalidConfig(format!("need n > p, got n = {n}, p = {p}")).into());
    }
    let dist = match args.dist {
        DistArg::Normal => ErrorDistribution::normal(args.sigma)?,
        DistArg::Laplace => ErrorDistribution::laplace(args.scale)?,
    };
    let mut x = generate_experiment_design(p, n, args.design_seed);
    if args.intercept {
        x.column_mut(0).fill(1.0);
    }
    let xf = args
        .xf
        .clone()
        .unwrap_or_else(|| (0..p).map(|i| 0.1 * i as f64).collect());
    let data = Dataset::new(x, nalgebra::DVector::zeros(n))?;
    let summary = design_summary(&data, &xf)?;
    let ctx = TheoryContext::new(dist, summary)?;
    let draws = sample_error_process(
        &ctx,
        &data,
        args.draws as usize,
        &args.x,
        args.nested as usize,
        RngStream::new(args.seed, 0),
    )?;
    let mut points = Vec::with_capacity(args.x.len());
    for (j, &xj) in args.x.iter().enumerate() {
        let u = ctx.u_function(xj)?;
        let column: Vec<f64> = draws.iter().map(|row| row[j]).collect();
        let ks = guarantee_pi_core::theory::ks_distance_to_normal(&column, u.sqrt());
        points.push(serde_json::json!({
            "x": xj,
            "u": u,
            "limit_sd": u.sqrt(),
            "ks_distance": ks,
        }));
    }
    let output = serde_json::json!({
        "n": n,
        "p": p,
        "draws": args.draws,
        "nested": args.nested,
        "generator": guarantee_pi_core::empirical::GENERATOR_ID,
        "points": points,
    });
    println!("{}", serde_json::to_string_pretty(&output)?);
    Ok(())
}
