mod common;

use common::{exact, makespan, mean_sojourn, random_workload, with_errors};
use proptest::prelude::*;
use schedsim::engine::{self, SchedulerDecision};
use schedsim::schedulers::{Fsp, LatePolicy, PendingView, Policy, SchedulerKind, TIE_TOL};
use schedsim::{EstimatedJob, JobId, RunResult};

fn run(kind: SchedulerKind, jobs: &[EstimatedJob]) -> RunResult {
    engine::run(jobs, kind.build().as_mut()).unwrap()
}

fn assert_times(result: &RunResult, expected: &[f64]) {
    let got = result.completion_times();
    assert_eq!(got.len(), expected.len());
    for (g, e) in got.iter().zip(expected) {
        assert!((g - e).abs() <= 1e-9, "got {got:?}, expected {expected:?}");
    }
}

// A(t=0, s=10), B(t=2, s=3):
//   FIFO: A 0..10, B 10..13.
//   PS:   A alone 0..2, then both at 1/2 until B's 3 units are done at 8,
//         A has 10 - 2 - 3 = 5 left and finishes at 13.
//   SRPT: at t=2 A has 8 left > 3, so B runs 2..5 and A finishes at 13.
//   FSP:  virtual PS finishes B at 8 and A at 13, so B is served first.
#[test]
fn two_job_hand_traces() {
    let jobs = exact(&[(0.0, 10.0), (2.0, 3.0)]);
    assert_times(&run(SchedulerKind::Fifo, &jobs), &[10.0, 13.0]);
    assert_times(&run(SchedulerKind::Ps, &jobs), &[13.0, 8.0]);
    assert_times(&run(SchedulerKind::Srpt, &jobs), &[13.0, 5.0]);
    assert_times(&run(SchedulerKind::FspFifo, &jobs), &[13.0, 5.0]);
    assert_times(&run(SchedulerKind::FspPs, &jobs), &[13.0, 5.0]);
    assert_eq!(mean_sojourn(&run(SchedulerKind::Srpt, &jobs)), 8.0);
}

// A(0,3), B(2,3): B runs alone 2..4 until it has A's 2 units, then both
// share and each needs 1 more unit at rate 1/2, finishing at 6.
#[test]
fn las_level_dynamics() {
    let r = run(SchedulerKind::Las, &exact(&[(0.0, 3.0), (2.0, 3.0)]));
    assert_times(&r, &[6.0, 6.0]);
    let sojourns: Vec<f64> = r.jobs.iter().map(|j| j.sojourn().unwrap()).collect();
    assert_eq!(sojourns, vec![6.0, 4.0]);
}

#[test]
fn ps_equal_jobs_finish_together() {
    assert_times(&run(SchedulerKind::Ps, &exact(&[(0.0, 1.0), (0.0, 1.0)])), &[2.0, 2.0]);
}

// Virtual PS on A(0,4), B(0,2) finishes B at 4 and A at 6; FSP runs B then
// A, finishing them at 2 and 6, never later than PS would.
#[test]
fn fsp_beats_ps_per_job() {
    let jobs = exact(&[(0.0, 4.0), (0.0, 2.0)]);
    assert_times(&run(SchedulerKind::FspPs, &jobs), &[6.0, 2.0]);
    assert_times(&run(SchedulerKind::Ps, &jobs), &[6.0, 4.0]);
}

#[test]
fn underestimated_single_job_goes_late() {
    let jobs = vec![EstimatedJob {
        label: "A".into(),
        submit_time: 0.0,
        true_size: 10.0,
        est_size: 2.0,
    }];
    for kind in [SchedulerKind::FspFifo, SchedulerKind::FspPs] {
        let r = run(kind, &jobs);
        assert_times(&r, &[10.0]);
        assert_eq!(r.jobs[0].became_late_at, Some(2.0));
    }
}

// Both jobs virtually finish at t=2 (1 unit each at rate 1/2) and become
// late together. Before that FSP serves A alone (tie -> A), so at t=2 A has
// 8 units left and B 10. FSP+FIFO runs A to t=10, then B to t=20. FSP+PS
// shares: A finishes at 2 + 16 = 18, B has 2 left then and finishes at 20.
#[test]
fn late_policies_diverge() {
    let jobs: Vec<EstimatedJob> = ["A", "B"]
        .iter()
        .map(|l| EstimatedJob {
            label: l.to_string(),
            submit_time: 0.0,
            true_size: 10.0,
            est_size: 1.0,
        })
        .collect();
    let fifo = run(SchedulerKind::FspFifo, &jobs);
    assert_times(&fifo, &[10.0, 20.0]);
    let ps = run(SchedulerKind::FspPs, &jobs);
    assert_times(&ps, &[18.0, 20.0]);
    for r in [&fifo, &ps] {
        assert_eq!(r.jobs[0].became_late_at, Some(2.0));
        assert_eq!(r.jobs[1].became_late_at, Some(2.0));
    }
}

#[test]
fn simultaneous_completion_and_arrival() {
    // A finishes exactly when B arrives; completion is processed first.
    let jobs = exact(&[(0.0, 2.0), (2.0, 1.0), (2.0, 1.0)]);
    for kind in SchedulerKind::ALL {
        let r = run(kind, &jobs);
        assert_eq!(r.jobs[0].completed_at, Some(2.0), "{kind}");
        assert!((r.total_simulated_time - 4.0).abs() < 1e-12);
    }
}

/// Wraps a policy and checks structural properties of every decision.
struct Checked {
    kind: SchedulerKind,
    inner: Box<dyn Policy>,
}

impl Policy for Checked {
    fn name(&self) -> &'static str {
        self.inner.name()
    }

    fn decide(&mut self, view: &PendingView<'_>) -> SchedulerDecision {
        let d = self.inner.decide(view);
        let rates = &d.allocation.rates;
        assert!(rates.iter().all(|r| *r >= 0.0));
        assert!((rates.iter().sum::<f64>() - 1.0).abs() <= 1e-9);
        let served: Vec<usize> = (0..rates.len()).filter(|&i| rates[i] > 0.0).collect();
        match self.kind {
            SchedulerKind::Fifo | SchedulerKind::Srpt => {
                assert_eq!(served.len(), 1);
                assert_eq!(rates[served[0]], 1.0);
            }
            SchedulerKind::Ps => assert_eq!(served.len(), rates.len()),
            SchedulerKind::Las => {
                let share = rates[served[0]];
                assert!(served.iter().all(|&i| rates[i] == share));
                let min = view.jobs.iter().map(|j| j.attained).fold(f64::INFINITY, f64::min);
                for &i in &served {
                    assert!(view.jobs[i].attained <= min + 2.0 * TIE_TOL);
                }
            }
            SchedulerKind::FspFifo | SchedulerKind::FspPs => {}
        }
        d
    }

    fn became_late_at(&self, job: JobId) -> Option<f64> {
        self.inner.became_late_at(job)
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn decisions_respect_policy_shape(seed in 0u64..1_000_000, sigma in prop::sample::select(vec![0.0, 0.5, 1.0])) {
        let jobs = with_errors(&random_workload(seed, 30), sigma, seed);
        for kind in SchedulerKind::ALL {
            let mut checked = Checked { kind, inner: kind.build() };
            engine::run(&jobs, &mut checked).unwrap();
        }
    }

    #[test]
    fn makespan_and_slowdown(seed in 0u64..1_000_000, sigma in prop::sample::select(vec![0.0, 0.5])) {
        let jobs = with_errors(&random_workload(seed, 40), sigma, seed ^ 7);
        let expected = makespan(&jobs);
        for kind in SchedulerKind::ALL {
            let r = run(kind, &jobs);
            prop_assert!((r.total_simulated_time - expected).abs() <= 1e-9 * expected.max(1.0));
            for j in &r.jobs {
                let sojourn = j.sojourn().unwrap();
                prop_assert!(sojourn >= j.true_size * (1.0 - 1e-9));
            }
        }
    }

    #[test]
    fn error_free_fsp_is_fair_and_never_late(seed in 0u64..1_000_000) {
        let jobs = with_errors(&random_workload(seed, 30), 0.0, 0);
        let ps = run(SchedulerKind::Ps, &jobs);
        let fifo = run(SchedulerKind::FspFifo, &jobs);
        let shared = run(SchedulerKind::FspPs, &jobs);
        for ((f, s), p) in fifo.jobs.iter().zip(&shared.jobs).zip(&ps.jobs) {
            prop_assert!(f.became_late_at.is_none() && s.became_late_at.is_none());
            prop_assert!((f.completed_at.unwrap() - s.completed_at.unwrap()).abs() <= 1e-9);
            prop_assert!(f.completed_at.unwrap() <= p.completed_at.unwrap() + 1e-9);
        }
        let srpt = mean_sojourn(&run(SchedulerKind::Srpt, &jobs));
        for kind in SchedulerKind::ALL {
            prop_assert!(srpt <= mean_sojourn(&run(kind, &jobs)) + 1e-9);
        }
    }

    #[test]
    fn runs_are_deterministic(seed in 0u64..1_000_000) {
        let jobs = with_errors(&random_workload(seed, 30), 0.8, seed);
        for kind in SchedulerKind::ALL {
            prop_assert_eq!(run(kind, &jobs), run(kind, &jobs));
        }
    }

    // With every job submitted at once, virtual completion order is the
    // order of estimated sizes, so scaling all estimates by a power of two
    // must not change which job FSP serves first.
    #[test]
    fn fsp_first_choice_invariant_under_estimate_scaling(
        ests in prop::collection::vec(0.01..100.0f64, 1..20),
        c in prop::sample::select(vec![0.125, 0.5, 2.0, 16.0]),
    ) {
        use schedsim::PendingJob;
        let view_of = |scale: f64| -> Vec<PendingJob> {
            ests.iter().enumerate().map(|(i, e)| PendingJob {
                id: JobId(i), submit_time: 0.0, est_size: e * scale, attained: 0.0,
            }).collect()
        };
        let mut a = Fsp::new(LatePolicy::Fifo);
        let mut b = Fsp::new(LatePolicy::Fifo);
        let da = a.decide(&PendingView { now: 0.0, jobs: &view_of(1.0) });
        let db = b.decide(&PendingView { now: 0.0, jobs: &view_of(c) });
        prop_assert_eq!(da.allocation, db.allocation);
    }
}
