//! Repeated, seeded simulation sweeps over error magnitude, load and d/n.
//!
//! For every grid point the trace is calibrated once. Each run then draws
//! fresh estimation errors with seed `base_seed + run_id`, so runs differ
//! only in their errors and all schedulers see the same draws for a given
//! run id. Configurations whose outcome cannot depend on the draws (no error,
//! or a scheduler that ignores estimates) are run once.

use std::cmp::Ordering;
use std::sync::Arc;

use rayon::prelude::*;
use thiserror::Error;

use crate::engine::{self, EngineError, RunResult};
use crate::errmodel::{estimate, ErrorModel, ErrorModelError};
use crate::metrics::{summarize, MetricsError, RunContext, RunSummary};
use crate::schedulers::SchedulerKind;
use crate::trace::{calibrate, size_jobs, CalibrationConfig, JobSpec, SizedJob, TraceError};

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Trace(#[from] TraceError),
    #[error(transparent)]
    ErrorModel(#[from] ErrorModelError),
    #[error(transparent)]
    Engine(#[from] EngineError),
    #[error(transparent)]
    Metrics(#[from] MetricsError),
}

/// Input to an experiment: a raw byte-level trace, calibrated per grid
/// point, or jobs whose sizes are already known.
#[derive(Debug, Clone)]
pub enum Workload {
    Trace(Vec<JobSpec>),
    Sized(Vec<SizedJob>),
}

impl Workload {
    /// Sized jobs sorted by submit time. Pre-sized workloads ignore `cal`.
    pub fn sized(&self, cal: &CalibrationConfig) -> Result<Vec<SizedJob>, ExperimentError> {
        let mut jobs = match self {
            Workload::Trace(trace) => size_jobs(trace, &calibrate(trace, cal)?)?,
            Workload::Sized(jobs) => jobs.clone(),
        };
        jobs.sort_by(|a, b| a.submit_time.total_cmp(&b.submit_time));
        Ok(jobs)
    }

    pub fn len(&self) -> usize {
        match self {
            Workload::Trace(t) => t.len(),
            Workload::Sized(s) => s.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

pub type SweepRecord = RunSummary;

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub schedulers: Vec<SchedulerKind>,
    pub sigma_grid: Vec<f64>,
    pub load_grid: Vec<f64>,
    pub dn_grid: Vec<f64>,
    pub runs_per_point: u32,
    pub base_seed: u64,
    pub parallelism: usize,
}

pub fn default_sigma_grid() -> Vec<f64> {
    vec![0.0, 0.25, 0.5, 0.75, 1.0]
}

/// 0.1, 0.2, ..., 2.0
pub fn default_load_grid() -> Vec<f64> {
    (1..=20).map(|k| k as f64 / 10.0).collect()
}

pub fn default_dn_grid() -> Vec<f64> {
    vec![1.0, 2.0, 4.0, 8.0, 16.0]
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            schedulers: SchedulerKind::ALL.to_vec(),
            sigma_grid: default_sigma_grid(),
            load_grid: vec![0.9],
            dn_grid: vec![4.0],
            runs_per_point: 100,
            base_seed: 42,
            parallelism: std::thread::available_parallelism().map_or(1, |n| n.get()),
        }
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<(), ExperimentError> {
        let bad = |m: &str| Err(ExperimentError::Config(m.into()));
        if self.schedulers.is_empty() {
            return bad("no schedulers selected");
        }
        if self.runs_per_point == 0 {
            return bad("runs per point must be >= 1");
        }
        if self.parallelism == 0 {
            return bad("parallelism must be >= 1");
        }
        for (name, grid) in [
            ("sigma", &self.sigma_grid),
            ("load", &self.load_grid),
            ("d/n", &self.dn_grid),
        ] {
            if grid.is_empty() {
                return Err(ExperimentError::Config(format!("{name} grid is empty")));
            }
            if grid.iter().any(|v| !v.is_finite() || *v < 0.0) {
                return Err(ExperimentError::Config(format!(
                    "{name} grid has negative or non-finite values"
                )));
            }
        }
        if self.load_grid.iter().chain(&self.dn_grid).any(|v| *v == 0.0) {
            return bad("load and d/n must be > 0");
        }
        Ok(())
    }

    /// Runs recorded for one (scheduler, sigma) pair.
    pub fn runs_for(&self, scheduler: SchedulerKind, sigma: f64) -> u32 {
        if sigma == 0.0 || !scheduler.uses_estimates() {
            1
        } else {
            self.runs_per_point
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepAxis {
    Sigma,
    Load,
    Dn,
}

struct Task {
    scheduler: SchedulerKind,
    sigma: f64,
    point: usize,
    run_id: u64,
}

struct GridPoint {
    load: f64,
    dn: f64,
    jobs: Arc<Vec<SizedJob>>,
}

fn record_order(a: &RunSummary, b: &RunSummary) -> Ordering {
    a.scheduler_name
        .cmp(&b.scheduler_name)
        .then(a.sigma.total_cmp(&b.sigma))
        .then(a.load.total_cmp(&b.load))
        .then(a.dn_ratio.total_cmp(&b.dn_ratio))
        .then(a.run_id.cmp(&b.run_id))
}

fn run_task(task: &Task, point: &GridPoint, base_seed: u64) -> Result<RunSummary, ExperimentError> {
    let model = ErrorModel {
        sigma: task.sigma,
        seed: base_seed.wrapping_add(task.run_id),
    };
    let workload = estimate(&point.jobs, &model)?;
    let mut policy = task.scheduler.build();
    let result = engine::run(&workload, policy.as_mut())?;
    Ok(summarize(
        &result,
        &RunContext {
            scheduler: task.scheduler.name().to_string(),
            sigma: task.sigma,
            load: point.load,
            dn_ratio: point.dn,
            run_id: task.run_id,
        },
    )?)
}

/// Runs every combination of the configured grids. Records come back in
/// canonical order (scheduler name, sigma, load, d/n, run id) regardless of
/// parallelism.
pub fn run_grid(workload: &Workload, config: &ExperimentConfig) -> Result<Vec<SweepRecord>, ExperimentError> {
    config.validate()?;
    let mut schedulers = config.schedulers.clone();
    schedulers.sort_by_key(|s| s.name());
    schedulers.dedup();

    let mut points = Vec::new();
    for &load in &config.load_grid {
        for &dn in &config.dn_grid {
            let cal = CalibrationConfig { load, dn_ratio: dn };
            points.push(GridPoint {
                load,
                dn,
                jobs: Arc::new(workload.sized(&cal)?),
            });
        }
    }

    let mut tasks = Vec::new();
    for &scheduler in &schedulers {
        for &sigma in &config.sigma_grid {
            for point in 0..points.len() {
                for run_id in 0..config.runs_for(scheduler, sigma) {
                    tasks.push(Task {
                        scheduler,
                        sigma,
                        point,
                        run_id: run_id as u64,
                    });
                }
            }
        }
    }

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(config.parallelism)
        .build()
        .map_err(|e| ExperimentError::Config(e.to_string()))?;
    let mut records = pool.install(|| {
        tasks
            .par_iter()
            .map(|t| run_task(t, &points[t.point], config.base_seed))
            .collect::<Result<Vec<_>, _>>()
    })?;
    records.sort_by(record_order);
    Ok(records)
}

/// Sweep along one axis; the other two grids must hold a single value.
pub fn sweep(
    axis: SweepAxis,
    workload: &Workload,
    config: &ExperimentConfig,
) -> Result<Vec<SweepRecord>, ExperimentError> {
    let fixed = [
        (SweepAxis::Sigma, "sigma", config.sigma_grid.len()),
        (SweepAxis::Load, "load", config.load_grid.len()),
        (SweepAxis::Dn, "d/n", config.dn_grid.len()),
    ];
    for (a, name, len) in fixed {
        if a != axis && len != 1 {
            return Err(ExperimentError::Config(format!(
                "{name} must be a single value for this sweep, got {len}"
            )));
        }
    }
    if axis != SweepAxis::Sigma || config.load_grid.len() > 1 || config.dn_grid.len() > 1 {
        if let Workload::Sized(_) = workload {
            return Err(ExperimentError::Config(
                "load and d/n sweeps need a byte-level trace, not a pre-sized workload".into(),
            ));
        }
    }
    run_grid(workload, config)
}

pub fn sweep_sigma(workload: &Workload, config: &ExperimentConfig) -> Result<Vec<SweepRecord>, ExperimentError> {
    sweep(SweepAxis::Sigma, workload, config)
}

pub fn sweep_load(workload: &Workload, config: &ExperimentConfig) -> Result<Vec<SweepRecord>, ExperimentError> {
    sweep(SweepAxis::Load, workload, config)
}

pub fn sweep_dn(workload: &Workload, config: &ExperimentConfig) -> Result<Vec<SweepRecord>, ExperimentError> {
    sweep(SweepAxis::Dn, workload, config)
}

/// Mean over runs at one (scheduler, sigma, load, d/n) point.
#[derive(Debug, Clone, PartialEq)]
pub struct PointMean {
    pub scheduler: String,
    pub sigma: f64,
    pub load: f64,
    pub dn_ratio: f64,
    pub runs: usize,
    pub mean_sojourn: f64,
    pub mean_slowdown: f64,
}

/// Aggregates records that are in canonical order.
pub fn point_means(records: &[SweepRecord]) -> Vec<PointMean> {
    let same_point = |a: &RunSummary, b: &RunSummary| {
        a.scheduler_name == b.scheduler_name && a.sigma == b.sigma && a.load == b.load && a.dn_ratio == b.dn_ratio
    };
    records
        .chunk_by(same_point)
        .map(|group| {
            let n = group.len() as f64;
            PointMean {
                scheduler: group[0].scheduler_name.clone(),
                sigma: group[0].sigma,
                load: group[0].load,
                dn_ratio: group[0].dn_ratio,
                runs: group.len(),
                mean_sojourn: group.iter().map(|r| r.mean_sojourn).sum::<f64>() / n,
                mean_slowdown: group.iter().map(|r| r.mean_slowdown).sum::<f64>() / n,
            }
        })
        .collect()
}

/// One deterministic run, returning the summary and the per-job result.
pub fn simulate_once(
    workload: &Workload,
    scheduler: SchedulerKind,
    sigma: f64,
    cal: CalibrationConfig,
    seed: u64,
) -> Result<(RunSummary, RunResult), ExperimentError> {
    let jobs = workload.sized(&cal)?;
    let estimated = estimate(&jobs, &ErrorModel { sigma, seed })?;
    let mut policy = scheduler.build();
    let result = engine::run(&estimated, policy.as_mut())?;
    let summary = summarize(
        &result,
        &RunContext {
            scheduler: scheduler.name().to_string(),
            sigma,
            load: cal.load,
            dn_ratio: cal.dn_ratio,
            run_id: 0,
        },
    )?;
    Ok((summary, result))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::trace::{gen_synthetic, synthetic_trace, SizeDistribution, SyntheticSpec};

    fn small_trace() -> Workload {
        let spec: SyntheticSpec = "n=40,rate=0.5,seed=3".parse().unwrap();
        Workload::Trace(synthetic_trace(&spec).unwrap())
    }

    fn config(schedulers: &[SchedulerKind], runs: u32) -> ExperimentConfig {
        ExperimentConfig {
            schedulers: schedulers.to_vec(),
            runs_per_point: runs,
            parallelism: 2,
            ..ExperimentConfig::default()
        }
    }

    #[test]
    fn single_run_rule() {
        let w = small_trace();
        let cfg = ExperimentConfig {
            sigma_grid: vec![0.0],
            ..config(&[SchedulerKind::Ps], 100)
        };
        assert_eq!(sweep_sigma(&w, &cfg).unwrap().len(), 1);

        let cfg = ExperimentConfig {
            sigma_grid: vec![0.5],
            ..config(&[SchedulerKind::Srpt], 100)
        };
        let recs = sweep_sigma(&w, &cfg).unwrap();
        assert_eq!(recs.len(), 100);
        let ids: std::collections::BTreeSet<u64> = recs.iter().map(|r| r.run_id).collect();
        assert_eq!(ids.len(), 100);

        let cfg = ExperimentConfig {
            sigma_grid: vec![0.0, 0.5],
            ..config(&[SchedulerKind::Fifo, SchedulerKind::Las, SchedulerKind::FspPs], 7)
        };
        // FIFO, LAS: 1 + 1 each; FSP+PS: 1 + 7
        assert_eq!(sweep_sigma(&w, &cfg).unwrap().len(), 12);
    }

    #[test]
    fn records_are_canonically_ordered() {
        let cfg = ExperimentConfig {
            sigma_grid: vec![0.5, 0.0],
            ..config(&[SchedulerKind::Srpt, SchedulerKind::FspFifo, SchedulerKind::Ps], 3)
        };
        let recs = sweep_sigma(&small_trace(), &cfg).unwrap();
        let keys: Vec<(String, f64, u64)> = recs
            .iter()
            .map(|r| (r.scheduler_name.clone(), r.sigma, r.run_id))
            .collect();
        let mut sorted = keys.clone();
        sorted.sort_by(|a, b| a.0.cmp(&b.0).then(a.1.total_cmp(&b.1)).then(a.2.cmp(&b.2)));
        assert_eq!(keys, sorted);
        assert_eq!(recs[0].scheduler_name, "FSP+FIFO");
    }

    #[test]
    fn sweeps_agree_at_shared_settings() {
        let w = small_trace();
        let base = ExperimentConfig {
            sigma_grid: vec![0.0],
            ..config(&SchedulerKind::ALL, 3)
        };
        let by_sigma = sweep_sigma(&w, &base).unwrap();
        let by_load = sweep_load(&w, &base).unwrap();
        let by_dn = sweep_dn(&w, &base).unwrap();
        assert_eq!(by_sigma, by_load);
        assert_eq!(by_sigma, by_dn);
    }

    #[test]
    fn sweep_shape_is_checked() {
        let w = small_trace();
        let cfg = ExperimentConfig {
            load_grid: vec![0.5, 0.9],
            ..config(&[SchedulerKind::Ps], 1)
        };
        assert!(matches!(sweep_sigma(&w, &cfg), Err(ExperimentError::Config(_))));
        let sized = Workload::Sized(gen_synthetic(5, 1.0, SizeDistribution::default(), 1).unwrap());
        let cfg = ExperimentConfig {
            sigma_grid: vec![0.0],
            load_grid: vec![0.5, 0.9],
            ..config(&[SchedulerKind::Ps], 1)
        };
        assert!(matches!(sweep_load(&sized, &cfg), Err(ExperimentError::Config(_))));
        let cfg = ExperimentConfig {
            runs_per_point: 0,
            ..config(&[SchedulerKind::Ps], 1)
        };
        assert!(matches!(sweep_sigma(&w, &cfg), Err(ExperimentError::Config(_))));
    }

    #[test]
    fn point_means_average_runs() {
        let cfg = ExperimentConfig {
            sigma_grid: vec![0.5],
            ..config(&[SchedulerKind::Srpt, SchedulerKind::Ps], 4)
        };
        let recs = sweep_sigma(&small_trace(), &cfg).unwrap();
        let means = point_means(&recs);
        assert_eq!(means.len(), 2);
        assert_eq!((means[0].scheduler.as_str(), means[0].runs), ("PS", 1));
        assert_eq!((means[1].scheduler.as_str(), means[1].runs), ("SRPT", 4));
        let expect = recs[1..].iter().map(|r| r.mean_sojourn).sum::<f64>() / 4.0;
        assert!((means[1].mean_sojourn - expect).abs() < 1e-12 * expect);
    }

    #[test]
    fn simulate_once_examples() {
        let single = Workload::Sized(gen_synthetic(1, 1.0, SizeDistribution::Uniform { lo: 5.0, hi: 5.0 }, 1).unwrap());
        for kind in SchedulerKind::ALL {
            let (s, _) = simulate_once(&single, kind, 0.7, CalibrationConfig::default(), 3).unwrap();
            assert_eq!(s.mean_sojourn, 5.0);
        }

        let two = Workload::Sized(vec![
            SizedJob {
                label: "A".into(),
                submit_time: 0.0,
                true_size: 10.0,
            },
            SizedJob {
                label: "B".into(),
                submit_time: 2.0,
                true_size: 3.0,
            },
        ]);
        let (s, r) = simulate_once(&two, SchedulerKind::Srpt, 0.0, CalibrationConfig::default(), 0).unwrap();
        assert_eq!(s.mean_sojourn, 8.0);
        assert_eq!(r.completion_times(), vec![13.0, 5.0]);

        let w = small_trace();
        let a = simulate_once(&w, SchedulerKind::FspFifo, 0.5, CalibrationConfig::default(), 9).unwrap();
        let b = simulate_once(&w, SchedulerKind::FspFifo, 0.5, CalibrationConfig::default(), 9).unwrap();
        assert_eq!(a, b);
    }
}
