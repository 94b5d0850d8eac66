use super::{earlier, PendingView, Policy};
use crate::engine::{RateAllocation, SchedulerDecision};

/// Shortest remaining processing time, on estimated remaining work.
///
/// A job that outlived its estimate has zero estimated remaining work and
/// therefore wins until it really completes.
#[derive(Debug, Default, Clone, Copy)]
pub struct Srpt;

impl Policy for Srpt {
    fn name(&self) -> &'static str {
        "SRPT"
    }

    fn decide(&mut self, view: &PendingView<'_>) -> SchedulerDecision {
        let jobs = view.jobs;
        let best = (1..jobs.len()).fold(0, |best, i| {
            let (ri, rb) = (jobs[i].est_remaining(), jobs[best].est_remaining());
            if ri < rb || (ri == rb && earlier(&jobs[i], &jobs[best])) {
                i
            } else {
                best
            }
        });
        SchedulerDecision {
            allocation: RateAllocation::single(jobs.len(), best),
            wakeup: None,
        }
    }
}
