use super::{PendingView, Policy};
use crate::engine::{RateAllocation, SchedulerDecision};

/// Processor sharing: each of the n pending jobs runs at rate 1/n.
#[derive(Debug, Default, Clone, Copy)]
pub struct Ps;

impl Policy for Ps {
    fn name(&self) -> &'static str {
        "PS"
    }

    fn decide(&mut self, view: &PendingView<'_>) -> SchedulerDecision {
        let n = view.jobs.len();
        SchedulerDecision {
            allocation: RateAllocation {
                rates: vec![1.0 / n as f64; n],
            },
            wakeup: None,
        }
    }
}
