//! Trace-driven fluid simulator for size-based job scheduling when job
//! sizes are only known through noisy estimates.
//!
//! The pipeline is: parse or generate a trace ([`trace`]), calibrate it to a
//! target load, perturb sizes with log-normal estimation errors
//! ([`errmodel`]), run it through the event engine ([`engine`]) under one of
//! the policies in [`schedulers`], and summarize ([`metrics`]). The
//! [`experiment`] module repeats this over parameter grids and [`report`]
//! writes the results.

pub mod engine;
pub mod errmodel;
pub mod experiment;
pub mod metrics;
pub mod report;
pub mod schedulers;
pub mod trace;

pub use engine::{run, run_discretized, EngineError, JobId, JobRecord, RateAllocation, RunResult, SchedulerDecision};
pub use errmodel::{estimate, ErrorModel, EstimatedJob};
pub use experiment::{
    run_grid, simulate_once, sweep_dn, sweep_load, sweep_sigma, ExperimentConfig, ExperimentError, SweepRecord,
    Workload,
};
pub use metrics::{box_stats, summarize, BoxStats, RunSummary};
pub use schedulers::{LatePolicy, PendingJob, PendingView, Policy, SchedulerKind};
pub use trace::{
    calibrate, gen_synthetic, parse_swim, size_jobs, synthetic_trace, Calibration, CalibrationConfig, JobSpec,
    SizeDistribution, SizedJob, SyntheticSpec,
};
