//! Scheduling disciplines as rate-allocation policies.
//!
//! Every policy answers a [`PendingView`] with a [`SchedulerDecision`]:
//! non-negative rates over the pending jobs summing to one, plus an optional
//! wakeup time.

use std::fmt;
use std::str::FromStr;

use crate::engine::{JobId, SchedulerDecision};

mod fifo;
mod fsp;
mod las;
mod ps;
mod srpt;

pub use fifo::Fifo;
pub use fsp::{Fsp, LatePolicy};
pub use las::Las;
pub use ps::Ps;
pub use srpt::Srpt;

/// Tolerance for treating attained services (LAS) or virtual remaining
/// sizes (FSP) as equal.
pub const TIE_TOL: f64 = 1e-9;

/// What a policy knows about one pending job.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PendingJob {
    pub id: JobId,
    pub submit_time: f64,
    pub est_size: f64,
    /// True service received so far.
    pub attained: f64,
}

impl PendingJob {
    /// Estimated remaining work, clamped at zero once the estimate is used up.
    pub fn est_remaining(&self) -> f64 {
        (self.est_size - self.attained).max(0.0)
    }
}

/// Pending jobs in arrival order at time `now`.
#[derive(Debug, Clone, Copy)]
pub struct PendingView<'a> {
    pub now: f64,
    pub jobs: &'a [PendingJob],
}

pub trait Policy: Send {
    fn name(&self) -> &'static str;

    /// Called with at least one pending job.
    fn decide(&mut self, view: &PendingView<'_>) -> SchedulerDecision;

    /// When the job's estimated work ran out in the policy's own
    /// bookkeeping while it was still pending. Only FSP tracks this.
    fn became_late_at(&self, _job: JobId) -> Option<f64> {
        None
    }
}

impl<P: Policy + ?Sized> Policy for Box<P> {
    fn name(&self) -> &'static str {
        (**self).name()
    }
    fn decide(&mut self, view: &PendingView<'_>) -> SchedulerDecision {
        (**self).decide(view)
    }
    fn became_late_at(&self, job: JobId) -> Option<f64> {
        (**self).became_late_at(job)
    }
}

/// Deterministic tie-break shared by all policies: earlier submission, then
/// earlier position in the workload.
pub(crate) fn arrival_key(job: &PendingJob) -> (f64, JobId) {
    (job.submit_time, job.id)
}

pub(crate) fn earlier(a: &PendingJob, b: &PendingJob) -> bool {
    let (ta, ia) = arrival_key(a);
    let (tb, ib) = arrival_key(b);
    ta < tb || (ta == tb && ia < ib)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum SchedulerKind {
    Fifo,
    Ps,
    Las,
    Srpt,
    FspFifo,
    FspPs,
}

impl SchedulerKind {
    pub const ALL: [SchedulerKind; 6] = [
        SchedulerKind::Fifo,
        SchedulerKind::Ps,
        SchedulerKind::Las,
        SchedulerKind::Srpt,
        SchedulerKind::FspFifo,
        SchedulerKind::FspPs,
    ];

    pub fn name(self) -> &'static str {
        match self {
            SchedulerKind::Fifo => "FIFO",
            SchedulerKind::Ps => "PS",
            SchedulerKind::Las => "LAS",
            SchedulerKind::Srpt => "SRPT",
            SchedulerKind::FspFifo => "FSP+FIFO",
            SchedulerKind::FspPs => "FSP+PS",
        }
    }

    /// Whether decisions depend on size estimates.
    pub fn uses_estimates(self) -> bool {
        matches!(
            self,
            SchedulerKind::Srpt | SchedulerKind::FspFifo | SchedulerKind::FspPs
        )
    }

    pub fn build(self) -> Box<dyn Policy> {
        match self {
            SchedulerKind::Fifo => Box::new(Fifo),
            SchedulerKind::Ps => Box::new(Ps),
            SchedulerKind::Las => Box::new(Las),
            SchedulerKind::Srpt => Box::new(Srpt),
            SchedulerKind::FspFifo => Box::new(Fsp::new(LatePolicy::Fifo)),
            SchedulerKind::FspPs => Box::new(Fsp::new(LatePolicy::Ps)),
        }
    }
}

impl fmt::Display for SchedulerKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UnknownScheduler(pub String);

impl fmt::Display for UnknownScheduler {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "unknown scheduler `{}` (expected one of FIFO, PS, LAS, SRPT, FSP+FIFO, FSP+PS)",
            self.0
        )
    }
}

impl std::error::Error for UnknownScheduler {}

impl FromStr for SchedulerKind {
    type Err = UnknownScheduler;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        SchedulerKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| UnknownScheduler(s.to_string()))
    }
}
