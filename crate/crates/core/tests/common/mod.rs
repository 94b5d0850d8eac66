#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp, Pareto};
use schedsim::trace::SizedJob;
use schedsim::{estimate, ErrorModel, EstimatedJob};

/// Heavy-tailed workload of 1..=`max_jobs` jobs with sizes in [0.1, 100]
/// and Poisson arrivals at roughly 90% load.
pub fn random_workload(seed: u64, max_jobs: usize) -> Vec<SizedJob> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = rng.random_range(1..=max_jobs);
    let sizes = Pareto::new(0.1f64, 1.5).unwrap();
    let gaps = Exp::new(0.9f64 / 0.3).unwrap();
    let mut t = 0.0;
    (0..n)
        .map(|i| {
            if i > 0 {
                t += gaps.sample(&mut rng);
            }
            SizedJob {
                label: format!("w{seed}j{i}"),
                submit_time: t,
                true_size: sizes.sample(&mut rng).min(100.0),
            }
        })
        .collect()
}

pub fn with_errors(jobs: &[SizedJob], sigma: f64, seed: u64) -> Vec<EstimatedJob> {
    estimate(jobs, &ErrorModel { sigma, seed }).unwrap()
}

pub fn exact(jobs: &[(f64, f64)]) -> Vec<EstimatedJob> {
    jobs.iter()
        .enumerate()
        .map(|(i, &(t, s))| EstimatedJob::exact(((b'A' + i as u8) as char).to_string(), t, s))
        .collect()
}

pub fn mean_sojourn(result: &schedsim::RunResult) -> f64 {
    result.jobs.iter().map(|j| j.sojourn().unwrap()).sum::<f64>() / result.jobs.len() as f64
}

/// Last completion of any work-conserving schedule: work is processed
/// back to back, idling only when nothing has arrived.
pub fn makespan(jobs: &[EstimatedJob]) -> f64 {
    jobs.iter()
        .fold(f64::NEG_INFINITY, |t, j| t.max(j.submit_time) + j.true_size)
}
