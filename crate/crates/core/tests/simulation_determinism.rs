//! The harness must produce bit-identical reports at any parallelism
//! degree: every replicate and bootstrap replicate derives its generator
//! from the master seed, never from thread scheduling.

use guarantee_pi_core::intervals::Method;
use guarantee_pi_core::simulation::{
    run_experiment, BootstrapCounts, DesignSpec, SimConfig, SimulationReport,
};
use guarantee_pi_core::theory::ErrorDistribution;

fn config() -> SimConfig {
    SimConfig {
        n: 60,
        beta: vec![1.0, 0.5, -1.0],
        design: DesignSpec::StandardNormalIid { seed: 31 },
        intercept_column: false,
        xf: vec![0.0, 0.1, 0.2],
        dist: ErrorDistribution::laplace(1.0 / 2.0_f64.sqrt()).unwrap(),
        methods: vec![Method::Rb, Method::Mfmb, Method::Rbug, Method::Prbug],
        alpha: 0.05,
        gamma: 0.15,
        replications: 6,
        bootstrap: BootstrapCounts { b_roots: 120, b_adjust: 50, b_mc: 60 },
        coverage_quantile_probs: vec![0.25, 0.45, 0.65, 0.85],
        master_seed: 2024,
    }
}

fn run_with_threads(threads: usize) -> SimulationReport {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .expect("pool builds");
    let mut report = pool.install(|| run_experiment(&config()).unwrap());
    report.wall_time_seconds = 0.0;
    report
}

#[test]
fn reports_are_bit_identical_across_thread_counts() {
    let single = run_with_threads(1);
    for threads in [2, 4, 7] {
        let multi = run_with_threads(threads);
        assert_eq!(single.to_json(), multi.to_json(), "{threads} threads diverged");
        assert_eq!(single.flat_csv(), multi.flat_csv());
        assert_eq!(single.histogram_csv(), multi.histogram_csv());
    }
}

#[test]
fn design_loaded_from_file_reproduces_the_generated_design_run() {
    let generated = guarantee_pi_core::simulation::generate_experiment_design(3, 60, 31);
    let mut csv = String::from("x1,x2,x3\n");
    for i in 0..60 {
        csv.push_str(&format!("{},{},{}\n", generated[(i, 0)], generated[(i, 1)], generated[(i, 2)]));
    }
    let path = std::env::temp_dir().join("design_round_trip.csv");
    std::fs::write(&path, csv).unwrap();

    let mut from_file = config();
    from_file.design = DesignSpec::FromFile { path: path.clone() };
    let mut base = run_experiment(&config()).unwrap();
    let mut loaded = run_experiment(&from_file).unwrap();
    base.wall_time_seconds = 0.0;
    loaded.wall_time_seconds = 0.0;
    // Same design, same seeds: identical results; only the config echo differs.
    assert_eq!(base.methods, loaded.methods);
    std::fs::remove_file(path).ok();
}
