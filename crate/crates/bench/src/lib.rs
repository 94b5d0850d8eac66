//! Workload fixtures shared by the benchmarks.

use schedsim::{estimate, synthetic_trace, CalibrationConfig, ErrorModel, EstimatedJob, SyntheticSpec, Workload};

/// Heavy-tailed synthetic workload of `n` jobs at load 0.9, d/n 4, with
/// estimation errors drawn at `sigma`.
pub fn estimated_workload(n: usize, sigma: f64, seed: u64) -> Vec<EstimatedJob> {
    let spec = SyntheticSpec {
        n_jobs: n,
        seed,
        ..SyntheticSpec::default()
    };
    let trace = Workload::Trace(synthetic_trace(&spec).expect("valid spec"));
    let jobs = trace.sized(&CalibrationConfig::default()).expect("calibrates");
    estimate(&jobs, &ErrorModel { sigma, seed }).expect("positive sizes")
}
