use super::{PendingView, Policy, TIE_TOL};
use crate::engine::{RateAllocation, SchedulerDecision};

/// Least attained service.
///
/// Jobs sharing the minimum attained service (within [`TIE_TOL`]) split the
/// capacity equally. A wakeup is requested for when that group catches up
/// with the next attained level, at which point the groups merge.
#[derive(Debug, Default, Clone, Copy)]
pub struct Las;

impl Policy for Las {
    fn name(&self) -> &'static str {
        "LAS"
    }

    fn decide(&mut self, view: &PendingView<'_>) -> SchedulerDecision {
        let jobs = view.jobs;
        let min = jobs.iter().map(|j| j.attained).fold(f64::INFINITY, f64::min);
        let mut level = min + TIE_TOL;
        let (group, wakeup) = loop {
            let group: Vec<usize> = (0..jobs.len()).filter(|&i| jobs[i].attained <= level).collect();
            let next = jobs
                .iter()
                .map(|j| j.attained)
                .filter(|&a| a > level)
                .fold(f64::INFINITY, f64::min);
            if !next.is_finite() {
                break (group, None);
            }
            let catch_up = view.now + (next - min) * group.len() as f64;
            if catch_up > view.now {
                break (group, Some(catch_up));
            }
            // Gap below clock resolution: treat the next level as tied.
            level = next + TIE_TOL;
        };
        SchedulerDecision {
            allocation: RateAllocation::uniform(jobs.len(), &group),
            wakeup,
        }
    }
}
