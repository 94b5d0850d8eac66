//! Fluid event-driven simulation core.
//!
//! The whole cluster is one unit of service capacity. At every event the
//! policy splits that capacity among pending jobs; between events each job's
//! attained service grows linearly at its rate. The next event is the
//! earliest of the next arrival, the earliest projected completion and the
//! policy's wakeup.
//!
//! Policies only see estimated sizes and attained service; true remaining
//! work stays inside the engine.

use thiserror::Error;

use crate::errmodel::EstimatedJob;
use crate::schedulers::{PendingJob, PendingView, Policy};

/// Absolute completion tolerance, seconds.
pub const EPS_ABS: f64 = 1e-12;
/// Relative completion tolerance, fraction of true size.
pub const EPS_REL: f64 = 1e-9;
/// Allowed deviation of the sum of rates from 1.
pub const RATE_SUM_TOL: f64 = 1e-9;

pub const DEFAULT_MAX_EVENTS: u64 = 100_000_000;

/// Index of a job in the workload passed to [`run`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct JobId(pub usize);

#[derive(Debug, Error, PartialEq)]
pub enum EngineError {
    #[error("workload is empty")]
    EmptyWorkload,
    #[error("workload is not sorted by submit time at index {index}")]
    UnsortedWorkload { index: usize },
    #[error("job `{label}` has an invalid size or submit time")]
    InvalidJob { label: String },
    #[error("policy violation at t={time}: {reason}")]
    PolicyViolation { time: f64, reason: String },
    #[error("event limit of {limit} exceeded")]
    NonTermination { limit: u64 },
    #[error("step must be positive and finite, got {0}")]
    InvalidStep(f64),
}

/// Service rates aligned with the jobs of the [`PendingView`] they answer.
#[derive(Debug, Clone, PartialEq)]
pub struct RateAllocation {
    pub rates: Vec<f64>,
}

impl RateAllocation {
    /// All capacity to the job at position `winner`.
    pub fn single(len: usize, winner: usize) -> Self {
        let mut rates = vec![0.0; len];
        rates[winner] = 1.0;
        RateAllocation { rates }
    }

    /// Equal shares among `members`, which must be non-empty.
    pub fn uniform(len: usize, members: &[usize]) -> Self {
        let mut rates = vec![0.0; len];
        let share = 1.0 / members.len() as f64;
        for &m in members {
            rates[m] = share;
        }
        RateAllocation { rates }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SchedulerDecision {
    pub allocation: RateAllocation,
    /// Absolute time at which the policy must be consulted again even if no
    /// job arrives or completes.
    pub wakeup: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct JobRecord {
    pub label: String,
    pub submit_time: f64,
    pub true_size: f64,
    pub est_size: f64,
    pub completed_at: Option<f64>,
    pub became_late_at: Option<f64>,
}

impl JobRecord {
    pub fn sojourn(&self) -> Option<f64> {
        self.completed_at.map(|c| c - self.submit_time)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunResult {
    pub jobs: Vec<JobRecord>,
    /// Time of the last completion.
    pub total_simulated_time: f64,
    /// Number of policy consultations.
    pub events: u64,
}

impl RunResult {
    pub fn completion_times(&self) -> Vec<f64> {
        self.jobs.iter().map(|j| j.completed_at.unwrap_or(f64::NAN)).collect()
    }
}

#[derive(Debug, Clone, Copy)]
pub struct EngineConfig {
    pub max_events: u64,
}

impl Default for EngineConfig {
    fn default() -> Self {
        EngineConfig {
            max_events: DEFAULT_MAX_EVENTS,
        }
    }
}

fn validate_workload(workload: &[EstimatedJob]) -> Result<(), EngineError> {
    if workload.is_empty() {
        return Err(EngineError::EmptyWorkload);
    }
    for (i, j) in workload.iter().enumerate() {
        let ok = j.true_size > 0.0
            && j.true_size.is_finite()
            && j.est_size > 0.0
            && j.est_size.is_finite()
            && j.submit_time.is_finite();
        if !ok {
            return Err(EngineError::InvalidJob { label: j.label.clone() });
        }
        if i > 0 && workload[i - 1].submit_time > j.submit_time {
            return Err(EngineError::UnsortedWorkload { index: i });
        }
    }
    Ok(())
}

fn completion_slack(true_size: f64) -> f64 {
    EPS_ABS.max(EPS_REL * true_size)
}

fn validate_decision(decision: &SchedulerDecision, pending: usize, now: f64) -> Result<(), EngineError> {
    let violation = |reason: String| EngineError::PolicyViolation { time: now, reason };
    let rates = &decision.allocation.rates;
    if rates.len() != pending {
        return Err(violation(format!("{} rates for {} pending jobs", rates.len(), pending)));
    }
    if let Some(r) = rates.iter().find(|r| !(r.is_finite() && **r >= 0.0)) {
        return Err(violation(format!("invalid rate {r}")));
    }
    let sum: f64 = rates.iter().sum();
    if (sum - 1.0).abs() > RATE_SUM_TOL {
        return Err(violation(format!("rates sum to {sum}")));
    }
    if let Some(w) = decision.wakeup {
        if w.is_nan() || w <= now {
            return Err(violation(format!("wakeup {w} is not in the future")));
        }
    }
    Ok(())
}

/// Mutable per-run bookkeeping shared by both engines.
struct State<'a> {
    workload: &'a [EstimatedJob],
    attained: Vec<f64>,
    completed_at: Vec<Option<f64>>,
    /// Pending job indices, in workload order.
    pending: Vec<usize>,
    next_arrival: usize,
    view: Vec<PendingJob>,
}

impl<'a> State<'a> {
    fn new(workload: &'a [EstimatedJob]) -> Self {
        State {
            workload,
            attained: vec![0.0; workload.len()],
            completed_at: vec![None; workload.len()],
            pending: Vec::new(),
            next_arrival: 0,
            view: Vec::new(),
        }
    }

    fn remaining(&self, j: usize) -> f64 {
        self.workload[j].true_size - self.attained[j]
    }

    fn is_done(&self, j: usize) -> bool {
        self.remaining(j) <= completion_slack(self.workload[j].true_size)
    }

    fn retire_completed(&mut self, now: f64) {
        let (attained, completed_at, workload) = (&mut self.attained, &mut self.completed_at, self.workload);
        self.pending.retain(|&j| {
            let size = workload[j].true_size;
            if size - attained[j] <= completion_slack(size) {
                attained[j] = size;
                completed_at[j] = Some(now);
                false
            } else {
                true
            }
        });
    }

    fn admit_arrivals(&mut self, now: f64) {
        while let Some(j) = self.workload.get(self.next_arrival) {
            if j.submit_time > now {
                break;
            }
            self.pending.push(self.next_arrival);
            self.next_arrival += 1;
        }
    }

    fn next_arrival_time(&self) -> Option<f64> {
        self.workload.get(self.next_arrival).map(|j| j.submit_time)
    }

    fn consult(&mut self, policy: &mut dyn Policy, now: f64) -> Result<SchedulerDecision, EngineError> {
        self.view.clear();
        self.view.extend(self.pending.iter().map(|&j| {
            let job = &self.workload[j];
            PendingJob {
                id: JobId(j),
                submit_time: job.submit_time,
                est_size: job.est_size,
                attained: self.attained[j],
            }
        }));
        let decision = policy.decide(&PendingView { now, jobs: &self.view });
        validate_decision(&decision, self.pending.len(), now)?;
        Ok(decision)
    }

    fn finish(self, policy: &dyn Policy, end: f64, events: u64) -> RunResult {
        let jobs = self
            .workload
            .iter()
            .enumerate()
            .map(|(i, j)| JobRecord {
                label: j.label.clone(),
                submit_time: j.submit_time,
                true_size: j.true_size,
                est_size: j.est_size,
                completed_at: self.completed_at[i],
                became_late_at: policy.became_late_at(JobId(i)),
            })
            .collect();
        RunResult {
            jobs,
            total_simulated_time: end,
            events,
        }
    }
}

/// Runs `workload` (sorted by submit time) to completion under `policy`.
pub fn run(workload: &[EstimatedJob], policy: &mut dyn Policy) -> Result<RunResult, EngineError> {
    run_with(workload, policy, &EngineConfig::default())
}

pub fn run_with(
    workload: &[EstimatedJob],
    policy: &mut dyn Policy,
    config: &EngineConfig,
) -> Result<RunResult, EngineError> {
    validate_workload(workload)?;
    let mut st = State::new(workload);
    let mut now = workload[0].submit_time;
    let mut events = 0u64;

    loop {
        // Same-instant ordering: completions, arrivals, then one consultation.
        st.retire_completed(now);
        st.admit_arrivals(now);
        if st.pending.is_empty() {
            match st.next_arrival_time() {
                Some(t) => {
                    now = t;
                    continue;
                }
                None => break,
            }
        }

        events += 1;
        if events > config.max_events {
            return Err(EngineError::NonTermination {
                limit: config.max_events,
            });
        }
        let decision = st.consult(policy, now)?;
        let rates = &decision.allocation.rates;

        let mut t_next = f64::INFINITY;
        let mut finisher = None;
        for (k, &j) in st.pending.iter().enumerate() {
            if rates[k] > 0.0 {
                let t = now + st.remaining(j) / rates[k];
                if t < t_next {
                    t_next = t;
                    finisher = Some(k);
                }
            }
        }
        if let Some(t) = st.next_arrival_time() {
            if t < t_next {
                t_next = t;
                finisher = None;
            }
        }
        if let Some(w) = decision.wakeup {
            if w < t_next {
                t_next = w;
                finisher = None;
            }
        }
        if !t_next.is_finite() {
            return Err(EngineError::PolicyViolation {
                time: now,
                reason: "no job makes progress".into(),
            });
        }

        let dt = t_next - now;
        for (k, &j) in st.pending.iter().enumerate() {
            if rates[k] > 0.0 {
                let size = workload[j].true_size;
                st.attained[j] = (st.attained[j] + rates[k] * dt).min(size);
            }
        }
        if let Some(k) = finisher {
            let j = st.pending[k];
            st.attained[j] = workload[j].true_size;
        }
        now = t_next;
    }

    Ok(st.finish(policy, now, events))
}

/// Brute-force fixed-step engine used as an oracle for [`run`].
///
/// Time advances on a grid of spacing `dt` anchored at the first arrival,
/// with extra breakpoints at arrivals and policy wakeups. Rates are held for
/// a whole step and completions are only detected at step ends. Capacity
/// left over by a job that finishes mid-step is carried into the next step
/// so no work is lost.
pub fn run_discretized(workload: &[EstimatedJob], policy: &mut dyn Policy, dt: f64) -> Result<RunResult, EngineError> {
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(EngineError::InvalidStep(dt));
    }
    validate_workload(workload)?;
    let origin = workload[0].submit_time;
    let grid = |k: u64| origin + k as f64 * dt;

    let mut st = State::new(workload);
    let mut now = origin;
    let mut k = 0u64;
    let mut carry = 0.0;
    let mut steps = 0u64;

    loop {
        st.admit_arrivals(now);
        if st.pending.is_empty() {
            carry = 0.0;
            match st.next_arrival_time() {
                Some(t) => {
                    now = t;
                    k = ((t - origin) / dt).floor() as u64;
                    continue;
                }
                None => break,
            }
        }
        steps += 1;
        if steps > DEFAULT_MAX_EVENTS {
            return Err(EngineError::NonTermination {
                limit: DEFAULT_MAX_EVENTS,
            });
        }
        let decision = st.consult(policy, now)?;

        while grid(k + 1) <= now {
            k += 1;
        }
        let mut step_end = grid(k + 1);
        if let Some(t) = st.next_arrival_time() {
            step_end = step_end.min(t);
        }
        if let Some(w) = decision.wakeup {
            step_end = step_end.min(w);
        }
        if step_end >= grid(k + 1) {
            k += 1;
        }

        let budget = (step_end - now) + carry;
        carry = 0.0;
        for (idx, &j) in st.pending.iter().enumerate() {
            st.attained[j] += decision.allocation.rates[idx] * budget;
            let over = st.attained[j] - workload[j].true_size;
            if over > 0.0 {
                carry += over;
                st.attained[j] = workload[j].true_size;
            }
        }
        now = step_end;
        for &j in &st.pending {
            if st.is_done(j) {
                st.completed_at[j] = Some(now);
            }
        }
        st.pending.retain(|&j| st.completed_at[j].is_none());
    }

    Ok(st.finish(policy, now, steps))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::schedulers::SchedulerKind;

    struct Idle;
    impl Policy for Idle {
        fn name(&self) -> &'static str {
            "idle"
        }
        fn decide(&mut self, view: &PendingView<'_>) -> SchedulerDecision {
            SchedulerDecision {
                allocation: RateAllocation {
                    rates: vec![0.0; view.jobs.len()],
                },
                wakeup: None,
            }
        }
    }

    struct StaleWakeup;
    impl Policy for StaleWakeup {
        fn name(&self) -> &'static str {
            "stale"
        }
        fn decide(&mut self, view: &PendingView<'_>) -> SchedulerDecision {
            SchedulerDecision {
                allocation: RateAllocation::single(view.jobs.len(), 0),
                wakeup: Some(view.now),
            }
        }
    }

    /// Wakes up every 1e-3 s, so a long job needs many events.
    struct Chatty;
    impl Policy for Chatty {
        fn name(&self) -> &'static str {
            "chatty"
        }
        fn decide(&mut self, view: &PendingView<'_>) -> SchedulerDecision {
            SchedulerDecision {
                allocation: RateAllocation::single(view.jobs.len(), 0),
                wakeup: Some(view.now + 1e-3),
            }
        }
    }

    fn job(t: f64, s: f64) -> EstimatedJob {
        EstimatedJob::exact(format!("{t}/{s}"), t, s)
    }

    #[test]
    fn single_job_completes_at_its_size() {
        for kind in SchedulerKind::ALL {
            let r = run(&[job(0.0, 5.0)], kind.build().as_mut()).unwrap();
            assert_eq!(r.jobs[0].completed_at, Some(5.0), "{kind}");
            assert_eq!(r.jobs[0].sojourn(), Some(5.0));
        }
    }

    #[test]
    fn discretized_single_job_is_quantized_up() {
        let r = run_discretized(&[job(0.0, 5.0)], SchedulerKind::Fifo.build().as_mut(), 1e-3).unwrap();
        let c = r.jobs[0].completed_at.unwrap();
        assert!((5.0..=5.001).contains(&c), "{c}");
    }

    #[test]
    fn idle_gaps_are_skipped() {
        let r = run(&[job(0.0, 1.0), job(10.0, 2.0)], SchedulerKind::Ps.build().as_mut()).unwrap();
        assert_eq!(r.completion_times(), vec![1.0, 12.0]);
        assert_eq!(r.total_simulated_time, 12.0);
    }

    #[test]
    fn rejects_bad_workloads() {
        let mut p = SchedulerKind::Ps.build();
        assert_eq!(run(&[], p.as_mut()), Err(EngineError::EmptyWorkload));
        assert_eq!(
            run(&[job(2.0, 1.0), job(1.0, 1.0)], p.as_mut()),
            Err(EngineError::UnsortedWorkload { index: 1 })
        );
        assert!(matches!(
            run(&[job(0.0, 0.0)], p.as_mut()),
            Err(EngineError::InvalidJob { .. })
        ));
        assert_eq!(
            run_discretized(&[job(0.0, 1.0)], p.as_mut(), 0.0),
            Err(EngineError::InvalidStep(0.0))
        );
    }

    #[test]
    fn policy_violations_are_reported() {
        assert!(matches!(
            run(&[job(0.0, 1.0)], &mut Idle),
            Err(EngineError::PolicyViolation { .. })
        ));
        assert!(matches!(
            run(&[job(0.0, 1.0)], &mut StaleWakeup),
            Err(EngineError::PolicyViolation { .. })
        ));
    }

    #[test]
    fn event_limit_guards_runaway_loops() {
        let cfg = EngineConfig { max_events: 100 };
        assert_eq!(
            run_with(&[job(0.0, 10.0)], &mut Chatty, &cfg),
            Err(EngineError::NonTermination { limit: 100 })
        );
        let r = run(&[job(0.0, 1.0)], &mut Chatty).unwrap();
        assert!((r.jobs[0].completed_at.unwrap() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn uniform_allocation_shares_evenly() {
        let a = RateAllocation::uniform(4, &[0, 2, 3]);
        assert_eq!(a.rates[1], 0.0);
        assert!((a.rates.iter().sum::<f64>() - 1.0).abs() < 1e-15);
    }
}
