//! Per-run summaries and cross-run box-plot statistics.

use thiserror::Error;

use crate::engine::RunResult;

#[derive(Debug, Error, PartialEq)]
pub enum MetricsError {
    #[error("job `{label}` did not complete")]
    IncompleteRun { label: String },
    #[error("no values to summarize")]
    EmptyInput,
}

/// Experiment coordinates a run is summarized under.
#[derive(Debug, Clone, PartialEq)]
pub struct RunContext {
    pub scheduler: String,
    pub sigma: f64,
    pub load: f64,
    pub dn_ratio: f64,
    pub run_id: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunSummary {
    pub scheduler_name: String,
    pub sigma: f64,
    pub load: f64,
    pub dn_ratio: f64,
    pub run_id: u64,
    pub mean_sojourn: f64,
    /// Mean of sojourn / true size; at least 1 under any work-conserving
    /// policy.
    pub mean_slowdown: f64,
    pub job_count: usize,
}

pub fn summarize(result: &RunResult, ctx: &RunContext) -> Result<RunSummary, MetricsError> {
    if result.jobs.is_empty() {
        return Err(MetricsError::EmptyInput);
    }
    let mut sojourn_sum = 0.0;
    let mut slowdown_sum = 0.0;
    for job in &result.jobs {
        let sojourn = job.sojourn().ok_or_else(|| MetricsError::IncompleteRun {
            label: job.label.clone(),
        })?;
        sojourn_sum += sojourn;
        slowdown_sum += sojourn / job.true_size;
    }
    let n = result.jobs.len() as f64;
    Ok(RunSummary {
        scheduler_name: ctx.scheduler.clone(),
        sigma: ctx.sigma,
        load: ctx.load,
        dn_ratio: ctx.dn_ratio,
        run_id: ctx.run_id,
        mean_sojourn: sojourn_sum / n,
        mean_slowdown: slowdown_sum / n,
        job_count: result.jobs.len(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoxStats {
    pub median: f64,
    pub q1: f64,
    pub q3: f64,
    pub whisker_lo: f64,
    pub whisker_hi: f64,
    pub n_outliers: usize,
}

/// Quantile of sorted data by linear interpolation between order
/// statistics (position `p * (n - 1)`).
pub fn quantile(sorted: &[f64], p: f64) -> f64 {
    let pos = p * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
}

/// Tukey box: whiskers reach the most extreme points within 1.5 IQR of the
/// box; everything beyond is an outlier.
pub fn box_stats(values: &[f64]) -> Result<BoxStats, MetricsError> {
    if values.is_empty() {
        return Err(MetricsError::EmptyInput);
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let q1 = quantile(&sorted, 0.25);
    let median = quantile(&sorted, 0.5);
    let q3 = quantile(&sorted, 0.75);
    let iqr = q3 - q1;
    let (lo_fence, hi_fence) = (q1 - 1.5 * iqr, q3 + 1.5 * iqr);
    let inside = || sorted.iter().copied().filter(|&v| v >= lo_fence && v <= hi_fence);
    // the box itself is always inside the fences, so these exist
    let whisker_lo = inside().fold(f64::INFINITY, f64::min).min(q1);
    let whisker_hi = inside().fold(f64::NEG_INFINITY, f64::max).max(q3);
    let n_outliers = sorted.iter().filter(|&&v| v < lo_fence || v > hi_fence).count();
    Ok(BoxStats {
        median,
        q1,
        q3,
        whisker_lo,
        whisker_hi,
        n_outliers,
    })
}

pub fn mean(values: &[f64]) -> Option<f64> {
    (!values.is_empty()).then(|| values.iter().sum::<f64>() / values.len() as f64)
}
