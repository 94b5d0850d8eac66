use super::{earlier, PendingView, Policy};
use crate::engine::{RateAllocation, SchedulerDecision};

/// First come, first served: the earliest submitted job gets everything.
#[derive(Debug, Default, Clone, Copy)]
pub struct Fifo;

impl Policy for Fifo {
    fn name(&self) -> &'static str {
        "FIFO"
    }

    fn decide(&mut self, view: &PendingView<'_>) -> SchedulerDecision {
        let jobs = view.jobs;
        let first = (1..jobs.len()).fold(0, |best, i| if earlier(&jobs[i], &jobs[best]) { i } else { best });
        SchedulerDecision {
            allocation: RateAllocation::single(jobs.len(), first),
            wakeup: None,
        }
    }
}
