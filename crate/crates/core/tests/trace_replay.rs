//! Recomputes every recorded selection round of every shipped scenario with the
//! reference evaluator.

mod common;

use aibt::domain::StateId;
use aibt::episode::{run_episode, RunOptions, TickRecord};
use aibt::scenario::Scenario;

use common::RefFactor;

/// Reference factors for one round: states with a non-zero preference, or all
/// states when every preference is zero.
fn round_factors(s: &Scenario, record: &TickRecord, candidates: &[String], preferences: &[Vec<f64>]) -> Vec<RefFactor> {
    let table = common::candidate_table(s);
    let mut states: Vec<usize> =
        (0..preferences.len()).filter(|&k| preferences[k].iter().any(|&v| v != 0.0)).collect();
    if states.is_empty() {
        states = (0..preferences.len()).collect();
    }
    states
        .into_iter()
        .map(|k| {
            let m = preferences[k].len();
            let identity: Vec<Vec<f64>> =
                (0..m).map(|r| (0..m).map(|c| if r == c { 1.0 } else { 0.0 }).collect()).collect();
            RefFactor {
                a: identity.clone(),
                d: record.predicted[k].clone(),
                c: preferences[k].clone(),
                obs: record.observations[k].map(|o| (0..m).map(|i| if i == o { 1.0 } else { 0.0 }).collect()),
                b: candidates
                    .iter()
                    .map(|label| {
                        table[label]
                            .transition(StateId(k))
                            .map(|b| b.matrix().to_rows())
                            .unwrap_or_else(|| identity.clone())
                    })
                    .collect(),
            }
        })
        .collect()
}

fn replay(name: &str, seed: Option<u64>) -> usize {
    let s = common::load(name);
    let e = run_episode(&s, RunOptions { seed, deterministic: seed.map(|_| false), ..Default::default() }).unwrap();
    let mut rounds = 0;
    for record in &e.records {
        for sel in &record.selections {
            for round in &sel.rounds {
                let factors = round_factors(&s, record, &round.candidates, &round.preferences);
                let reference = common::evaluate(&factors, round.candidates.len());
                let at = format!("{name} tick {} node {}", record.tick, sel.node);
                for u in 0..round.candidates.len() {
                    assert!((round.free_energy[u] - reference.f[u]).abs() < 1e-9, "{at}: F[{u}]");
                    assert!((round.expected_free_energy[u] - reference.g[u]).abs() < 1e-9, "{at}: G[{u}]");
                    assert!((round.policy_probs[u] - reference.pi[u]).abs() < 1e-9, "{at}: pi[{u}]");
                }
                assert_eq!(round.selected, round.candidates[common::argmax(&reference.pi)], "{at}: selection");
                rounds += 1;
            }
        }
    }
    rounds
}

#[test]
fn every_shipped_round_matches_the_reference() {
    for name in common::shipped() {
        let priors = common::load(&name).tree.counts().prior;
        assert_eq!(replay(&name, None) > 0, priors > 0, "{name}");
    }
}

#[test]
fn stochastic_runs_match_the_reference() {
    for seed in [3, 11, 42] {
        replay("scenario_1_conflict", Some(seed));
        replay("scenario_2", Some(seed));
    }
}

#[test]
fn records_are_well_formed() {
    for name in common::shipped() {
        let s = common::load(name.as_str());
        let e = run_episode(&s, RunOptions::default()).unwrap();
        for (i, r) in e.records.iter().enumerate() {
            assert_eq!(r.tick, i as u64);
            for b in r.beliefs.iter().chain(&r.predicted) {
                assert!((b.iter().sum::<f64>() - 1.0).abs() < 1e-9, "{name}: belief off the simplex");
            }
            for sel in &r.selections {
                for round in &sel.rounds {
                    assert!((round.policy_probs.iter().sum::<f64>() - 1.0).abs() < 1e-9);
                }
            }
        }
        assert!(e.records.len() as u64 <= s.budget_ticks);
    }
}
