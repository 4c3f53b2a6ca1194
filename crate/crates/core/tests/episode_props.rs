//! Prior bookkeeping and termination over recorded episodes.

mod common;

use proptest::prelude::*;

use aibt::btree::{NodeKind, TickStatus};
use aibt::domain::{Predicate, StateId};
use aibt::episode::{run_episode, Episode, EpisodeResult, RunOptions};
use aibt::scenario::Scenario;
use aibt::sim::PerturbationEvent;

fn check_bookkeeping(s: &Scenario, e: &Episode) -> Result<(), TestCaseError> {
    let registry = &s.domain.registry;
    for r in &e.records {
        for label in &r.priors.pushed {
            let p = Predicate::parse(registry, label).unwrap();
            prop_assert!(r.logical[p.state.0] != p.index, "tick {}: satisfied {} still pushed", r.tick, label);
        }
        for sel in &r.selections {
            // actions removed in earlier ticks are candidates again
            let NodeKind::Prior { params, .. } = &s.tree.node(sel.node).kind else {
                return Err(TestCaseError::fail("selection from a non-prior node"));
            };
            let expected: Vec<String> = s.domain.candidates(params).iter().map(|a| a.label()).collect();
            prop_assert_eq!(&sel.rounds[0].candidates, &expected);
            prop_assert_eq!(expected[0].as_str(), "Idle");
            for pair in sel.rounds.windows(2) {
                prop_assert_eq!(pair[1].candidates.len() + 1, pair[0].candidates.len());
            }
            let nothing_pushed = !sel.active_at_start;
            for round in sel.rounds.iter().take(1).filter(|_| nothing_pushed) {
                prop_assert!(round.preferences.iter().flatten().all(|&v| v == 0.0 || v == 1.0));
            }
        }
        for (owner, _) in &r.priors.nominal {
            let status = r.visits.iter().find(|v| v.node == *owner).map(|v| v.status);
            prop_assert_eq!(status, Some(TickStatus::Running), "tick {}: node {} kept its targets", r.tick, owner);
        }
    }
    Ok(())
}

#[test]
fn shipped_bookkeeping() {
    for name in common::shipped() {
        let s = common::load(&name);
        let e = run_episode(&s, RunOptions::default()).unwrap();
        check_bookkeeping(&s, &e).unwrap_or_else(|err| panic!("{name}: {err}"));
    }
}

#[test]
fn shipped_scenarios_terminate_for_many_seeds() {
    for name in common::shipped() {
        let s = common::load(&name);
        for seed in 0..20 {
            let e = run_episode(&s, RunOptions { seed: Some(seed), deterministic: Some(true), ..Default::default() }).unwrap();
            assert_ne!(e.result, EpisodeResult::Timeout, "{name} seed {seed}");
        }
    }
}

fn arb_episode() -> impl Strategy<Value = Scenario> {
    let base = common::load("scenario_1_conflict");
    let sizes: Vec<usize> = base.domain.registry.vars().iter().map(|v| v.m()).collect();
    let n = sizes.len();
    (
        prop::collection::vec(0usize..3, n),
        prop::collection::vec((1u64..40, 0..n, 0usize..3), 0..4),
        any::<u64>(),
        any::<bool>(),
    )
        .prop_map(move |(init, events, seed, deterministic)| {
            let mut s = base.clone();
            s.fluents = init.iter().zip(&sizes).map(|(v, m)| v % m).collect();
            let mut events = events;
            events.sort_by_key(|e| e.0);
            s.perturbations = events
                .into_iter()
                .map(|(t, k, v)| PerturbationEvent {
                    at_tick: t,
                    assignments: vec![(StateId(k), v % sizes[k])],
                    observability: vec![],
                })
                .collect();
            s.seed = seed;
            s.deterministic = deterministic;
            s.budget_ticks = 300;
            s
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn random_episodes_keep_priors_consistent(s in arb_episode()) {
        let e = run_episode(&s, RunOptions::default()).unwrap();
        check_bookkeeping(&s, &e)?;
        if s.deterministic {
            prop_assert_ne!(e.result, EpisodeResult::Timeout);
        }
    }
}
