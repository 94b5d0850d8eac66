//! Fair Sojourn Protocol.
//!
//! FSP emulates processor sharing on *estimated* sizes and serves, one at a
//! time, the pending job that would finish first in that emulation. Jobs
//! age in the virtual system whether or not they are actually served.
//!
//! With exact estimates no job outlives its virtual counterpart. With
//! under-estimates a job can reach virtual completion while still pending;
//! such a job is *late* and late jobs preempt everything else, either in
//! order of lateness ([`LatePolicy::Fifo`]) or sharing equally
//! ([`LatePolicy::Ps`]).
//!
//! Jobs that really complete stay in the virtual system until their virtual
//! completion, so the emulation is exactly PS over all submitted jobs.

use super::{earlier, PendingView, Policy, TIE_TOL};
use crate::engine::{JobId, RateAllocation, SchedulerDecision};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LatePolicy {
    /// The first job to become late gets all resources.
    Fifo,
    /// Late jobs share resources equally.
    Ps,
}

#[derive(Debug, Clone)]
struct VirtualJob {
    virtual_remaining: f64,
    really_done: bool,
    virtually_done_at: Option<f64>,
    became_late_at: Option<f64>,
    seen_epoch: u64,
}

/// Processor sharing over estimated sizes, advanced lazily.
#[derive(Debug, Clone, Default)]
pub(crate) struct VirtualPs {
    jobs: Vec<Option<VirtualJob>>,
    /// Jobs with virtual work left.
    active: Vec<usize>,
    clock: f64,
}

impl VirtualPs {
    fn get(&self, id: usize) -> Option<&VirtualJob> {
        self.jobs.get(id).and_then(Option::as_ref)
    }

    fn get_mut(&mut self, id: usize) -> &mut VirtualJob {
        self.jobs[id].as_mut().expect("job tracked")
    }

    fn contains(&self, id: usize) -> bool {
        self.get(id).is_some()
    }

    pub(crate) fn insert(&mut self, id: usize, est_size: f64, epoch: u64) {
        if self.jobs.len() <= id {
            self.jobs.resize(id + 1, None);
        }
        self.jobs[id] = Some(VirtualJob {
            virtual_remaining: est_size,
            really_done: false,
            virtually_done_at: None,
            became_late_at: None,
            seen_epoch: epoch,
        });
        self.active.push(id);
    }

    fn min_active(&self) -> Option<f64> {
        self.active
            .iter()
            .map(|&id| self.jobs[id].as_ref().unwrap().virtual_remaining)
            .reduce(f64::min)
    }

    /// Time of the next virtual completion, if any job is active.
    pub(crate) fn next_completion(&self) -> Option<f64> {
        self.min_active().map(|m| self.clock + m * self.active.len() as f64)
    }

    fn retire_exhausted(&mut self, at: f64) {
        let jobs = &mut self.jobs;
        self.active.retain(|&id| {
            let job = jobs[id].as_mut().unwrap();
            if job.virtual_remaining > 0.0 {
                return true;
            }
            job.virtual_remaining = 0.0;
            job.virtually_done_at = Some(at);
            if !job.really_done {
                job.became_late_at = Some(at);
            }
            false
        });
    }

    /// Runs the emulation forward to `to`, processing every virtual
    /// completion on the way.
    pub(crate) fn advance(&mut self, to: f64) {
        loop {
            let Some(min) = self.min_active() else {
                self.clock = self.clock.max(to);
                return;
            };
            let k = self.active.len() as f64;
            let done_at = self.clock + min * k;
            if done_at <= to {
                for &id in &self.active {
                    let job = self.jobs[id].as_mut().unwrap();
                    job.virtual_remaining = (job.virtual_remaining - min).max(0.0);
                }
                self.clock = done_at.max(self.clock);
                self.retire_exhausted(self.clock);
                continue;
            }
            if self.clock >= to {
                return;
            }
            let share = (to - self.clock) / k;
            for &id in &self.active {
                let job = self.jobs[id].as_mut().unwrap();
                job.virtual_remaining = (job.virtual_remaining - share).max(0.0);
            }
            self.clock = to;
            // loop again: a remainder too small to move the clock completes now
        }
    }

    #[cfg(test)]
    pub(crate) fn virtual_remaining(&self, id: usize) -> Option<f64> {
        self.get(id).map(|j| j.virtual_remaining)
    }

    #[cfg(test)]
    pub(crate) fn virtually_done_at(&self, id: usize) -> Option<f64> {
        self.get(id).and_then(|j| j.virtually_done_at)
    }
}

#[derive(Debug, Clone)]
pub struct Fsp {
    late_policy: LatePolicy,
    virt: VirtualPs,
    /// Jobs believed to be really pending, from the previous view.
    really_pending: Vec<usize>,
    epoch: u64,
}

impl Fsp {
    pub fn new(late_policy: LatePolicy) -> Self {
        Fsp {
            late_policy,
            virt: VirtualPs::default(),
            really_pending: Vec::new(),
            epoch: 0,
        }
    }

    pub fn late_policy(&self) -> LatePolicy {
        self.late_policy
    }

    /// Brings the virtual system up to `view.now`: registers arrivals, marks
    /// jobs missing from the view as really done, then advances.
    fn sync(&mut self, view: &PendingView<'_>) {
        self.epoch += 1;
        let epoch = self.epoch;
        let mut arrivals = Vec::new();
        for job in view.jobs {
            let id = job.id.0;
            if self.virt.contains(id) {
                self.virt.get_mut(id).seen_epoch = epoch;
            } else {
                arrivals.push(*job);
            }
        }
        let virt = &mut self.virt;
        self.really_pending.retain(|&id| {
            let job = virt.get_mut(id);
            if job.seen_epoch == epoch {
                true
            } else {
                job.really_done = true;
                false
            }
        });
        arrivals.sort_by(|a, b| a.submit_time.total_cmp(&b.submit_time));
        for job in arrivals {
            self.virt.advance(job.submit_time);
            self.virt.insert(job.id.0, job.est_size, epoch);
            self.really_pending.push(job.id.0);
        }
        self.virt.advance(view.now);
    }
}

impl Policy for Fsp {
    fn name(&self) -> &'static str {
        match self.late_policy {
            LatePolicy::Fifo => "FSP+FIFO",
            LatePolicy::Ps => "FSP+PS",
        }
    }

    fn decide(&mut self, view: &PendingView<'_>) -> SchedulerDecision {
        self.sync(view);
        let jobs = view.jobs;
        let len = jobs.len();
        let virt = &self.virt;
        let state = |i: usize| virt.get(jobs[i].id.0).expect("pending job tracked");

        let late: Vec<usize> = (0..len).filter(|&i| state(i).became_late_at.is_some()).collect();
        let allocation = if late.is_empty() {
            let best = (1..len).fold(0, |best, i| {
                let (vi, vb) = (state(i).virtual_remaining, state(best).virtual_remaining);
                if vi < vb - TIE_TOL || (vi <= vb + TIE_TOL && earlier(&jobs[i], &jobs[best])) {
                    i
                } else {
                    best
                }
            });
            RateAllocation::single(len, best)
        } else {
            match self.late_policy {
                LatePolicy::Fifo => {
                    let first = late[1..].iter().fold(late[0], |best, &i| {
                        let (li, lb) = (state(i).became_late_at, state(best).became_late_at);
                        if li < lb || (li == lb && earlier(&jobs[i], &jobs[best])) {
                            i
                        } else {
                            best
                        }
                    });
                    RateAllocation::single(len, first)
                }
                LatePolicy::Ps => RateAllocation::uniform(len, &late),
            }
        };
        SchedulerDecision {
            allocation,
            wakeup: self.virt.next_completion(),
        }
    }

    fn became_late_at(&self, job: JobId) -> Option<f64> {
        self.virt.get(job.0).and_then(|j| j.became_late_at)
    }
}
