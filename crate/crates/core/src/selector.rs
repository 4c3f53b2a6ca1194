//! Adaptive action selection: active inference over one-step policies, with
//! missing preconditions pushed back into the preferences until an executable
//! action is found.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::btree::TickStatus;
use crate::domain::{observation_vector, Domain, DomainError, GroundAction, LogicalState, Predicate, PriorSet, StateId};
use crate::inference::{
    run_active_inference, ActionId, Categorical, Factor, GenerativeModel, InferenceOutcome,
    LikelihoodMatrix, Policy, TransitionMatrix,
};

/// Present step plus one step of lookahead.
pub const HORIZON: usize = 2;

/// What the agent knows at the moment of selection.
#[derive(Debug, Clone, Copy)]
pub struct Evidence<'a> {
    /// Predicted prior for the present step, before the current observation.
    pub prior: &'a [Categorical<f64>],
    pub observations: &'a [Option<usize>],
    pub logical: &'a LogicalState,
}

/// One inference pass inside a selection.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SelectorRound {
    pub candidates: Vec<String>,
    /// Assembled preference per state.
    pub preferences: Vec<Vec<f64>>,
    pub free_energy: Vec<f64>,
    pub expected_free_energy: Vec<f64>,
    pub policy_probs: Vec<f64>,
    pub selected: String,
    /// Preconditions of `selected` that do not hold.
    pub blocked: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SelectorVerdict {
    /// Prior node that asked.
    pub owner: usize,
    pub status: TickStatus,
    pub action: Option<GroundAction>,
    /// Pushed entries active once satisfied ones were removed.
    pub active_at_start: bool,
    pub pushed: Vec<Predicate>,
    pub removed: Vec<Predicate>,
    pub rounds: Vec<SelectorRound>,
}

/// States the model covers: those with a preference, or every state when no
/// preference is set.
pub fn modelled_states(domain: &Domain, priors: &PriorSet, owner: usize) -> Vec<StateId> {
    let registry = &domain.registry;
    let relevant: Vec<StateId> =
        registry.ids().filter(|&s| !priors.assemble(registry, s, Some(owner)).is_indifferent()).collect();
    if relevant.is_empty() {
        registry.ids().collect()
    } else {
        relevant
    }
}

/// Generative model over the [`modelled_states`] with identity likelihoods and
/// one transition per candidate; states a candidate does not touch stay put.
pub fn build_model(
    domain: &Domain,
    candidates: &[GroundAction],
    priors: &PriorSet,
    owner: usize,
    evidence: &Evidence<'_>,
) -> GenerativeModel<f64> {
    let registry = &domain.registry;
    let factors = modelled_states(domain, priors, owner)
        .into_iter()
        .map(|s| {
            let m = registry.get(s).m();
            Factor {
                likelihood: LikelihoodMatrix::identity(m),
                initial: evidence.prior[s.0].clone(),
                preference: priors.assemble(registry, s, Some(owner)),
                observations: vec![evidence.observations[s.0].map(|o| observation_vector(m, o))],
                transitions: candidates
                    .iter()
                    .map(|a| a.transition(s).cloned().unwrap_or_else(|| TransitionMatrix::identity(m)))
                    .collect(),
            }
        })
        .collect();
    GenerativeModel { factors, history: Vec::new(), horizon: HORIZON }
}

fn unmet(domain: &Domain, action: &GroundAction, logical: &LogicalState) -> Result<Vec<Predicate>, DomainError> {
    let mut out = Vec::new();
    for p in &action.preconditions {
        if !logical.holds(&domain.registry, p)? {
            out.push(*p);
        }
    }
    Ok(out)
}

/// Selects an action for prior node `owner` whose nominal targets are already
/// in `priors`. Pushed entries are added to and removed from `priors` in place.
pub fn adaptive_select(
    domain: &Domain,
    priors: &mut PriorSet,
    owner: usize,
    params: &BTreeMap<String, String>,
    evidence: &Evidence<'_>,
) -> Result<SelectorVerdict, DomainError> {
    let registry = &domain.registry;
    let removed = priors.remove_satisfied(evidence.logical);
    let active_at_start = priors.has_pushed();
    let mut candidates = domain.candidates(params);
    let mut verdict = SelectorVerdict {
        owner,
        status: TickStatus::Failure,
        action: None,
        active_at_start,
        pushed: Vec::new(),
        removed,
        rounds: Vec::new(),
    };

    while !candidates.is_empty() {
        let model = build_model(domain, &candidates, priors, owner, evidence);
        let policies: Vec<Policy> = (0..candidates.len()).map(|i| Policy::single(ActionId(i))).collect();
        let outcome: InferenceOutcome<f64> = run_active_inference(&model, &policies)?;
        let chosen = candidates[outcome.chosen_action.0].clone();
        let blocked = if chosen.is_idle() { Vec::new() } else { unmet(domain, &chosen, evidence.logical)? };
        verdict.rounds.push(SelectorRound {
            candidates: candidates.iter().map(GroundAction::label).collect(),
            preferences: registry.ids().map(|s| priors.assemble(registry, s, Some(owner)).values().to_vec()).collect(),
            free_energy: outcome.free_energy.clone(),
            expected_free_energy: outcome.expected_free_energy.clone(),
            policy_probs: outcome.policy_probs.probs().to_vec(),
            selected: chosen.label(),
            blocked: blocked.iter().map(|p| p.display(registry).to_string()).collect(),
        });

        if chosen.is_idle() {
            // nothing to do on the first pass; no enabling action after a push
            verdict.status = if verdict.rounds.len() == 1 { TickStatus::Success } else { TickStatus::Failure };
            return Ok(verdict);
        }
        if blocked.is_empty() {
            verdict.status = TickStatus::Running;
            verdict.action = Some(chosen);
            return Ok(verdict);
        }
        for p in blocked {
            if priors.push(p) {
                verdict.pushed.push(p);
            }
        }
        candidates.retain(|a| !a.same_as(&chosen));
    }
    Ok(verdict)
}

/// Backward chain of actions built through precondition pushes.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Chain {
    pub start_tick: u64,
    pub actions: Vec<String>,
    /// `(blocked, enabler)` pairs observed within one selection, in order.
    pub links: Vec<(String, String)>,
}

/// Groups the selections of an episode into chains.
///
/// A chain starts at a selection made with no pushed preferences active and
/// absorbs the selections that follow while pushed preferences remain.
pub fn chain_trace<'a>(verdicts: impl IntoIterator<Item = (u64, &'a SelectorVerdict)>) -> Vec<Chain> {
    let mut chains: Vec<Chain> = Vec::new();
    for (tick, v) in verdicts {
        if !v.active_at_start || chains.is_empty() {
            chains.push(Chain { start_tick: tick, actions: Vec::new(), links: Vec::new() });
        }
        let chain = chains.last_mut().expect("a chain was just opened");
        for r in v.rounds.iter().filter(|r| r.selected != crate::domain::IDLE) {
            if !chain.actions.contains(&r.selected) {
                chain.actions.push(r.selected.clone());
            }
        }
        for pair in v.rounds.windows(2) {
            if !pair[0].blocked.is_empty() && pair[1].selected != crate::domain::IDLE {
                let link = (pair[0].selected.clone(), pair[1].selected.clone());
                if !chain.links.contains(&link) {
                    chain.links.push(link);
                }
            }
        }
    }
    chains.retain(|c| !c.actions.is_empty());
    chains.dedup_by(|b, a| a.actions.len() == 1 && a.actions == b.actions && a.links == b.links);
    chains
}

/// Whether `enabler` prepares `blocked`: its postconditions establish at least
/// one precondition of `blocked` and contradict none.
pub fn prepares(blocked: &GroundAction, enabler: &GroundAction) -> bool {
    let constrained: Vec<StateId> = blocked.preconditions.iter().map(|p| p.state).collect();
    let overlap: Vec<&Predicate> = enabler.postconditions.iter().filter(|p| constrained.contains(&p.state)).collect();
    !overlap.is_empty() && overlap.iter().all(|p| blocked.preconditions.contains(p))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::{predict, ActionTemplate, PostValue, Postcondition, StateRegistry, StateVar, IDLE};

    /// The pick-and-place domain with isAt labels [table, shelf].
    pub(crate) fn domain() -> Domain {
        let registry = StateRegistry::new(vec![
            StateVar { id: "isAt".into(), labels: vec!["table".into(), "shelf".into()] },
            StateVar::boolean("isHolding"),
            StateVar::boolean("isReachable"),
            StateVar::boolean("isPlacedAt"),
            StateVar::boolean("isLocationFree"),
        ])
        .unwrap();
        let p = |t: &str| Predicate::parse(&registry, t).unwrap();
        let post = |t: &str| {
            let q = p(t);
            Postcondition { state: q.state, value: PostValue::Index(q.index) }
        };
        let g = registry.lookup("isAt").unwrap();
        let actions = vec![
            ActionTemplate::new(IDLE),
            ActionTemplate {
                params: vec!["loc".into()],
                postconditions: vec![
                    Postcondition { state: g, value: PostValue::Param("loc".into()) },
                    post("isReachable"),
                ],
                ..ActionTemplate::new("moveTo")
            },
            ActionTemplate {
                preconditions: vec![p("isReachable"), p("!isHolding")],
                postconditions: vec![post("isHolding")],
                ..ActionTemplate::new("Pick")
            },
            ActionTemplate {
                preconditions: vec![p("isLocationFree")],
                postconditions: vec![post("isPlacedAt")],
                ..ActionTemplate::new("Place")
            },
            ActionTemplate {
                preconditions: vec![p("!isHolding")],
                postconditions: vec![post("isLocationFree")],
                ..ActionTemplate::new("Push")
            },
            ActionTemplate {
                postconditions: vec![post("!isHolding")],
                ..ActionTemplate::new("PlaceOnPlate")
            },
        ];
        Domain::new(registry, actions).unwrap()
    }

    fn bind(loc: &str) -> BTreeMap<String, String> {
        BTreeMap::from([("loc".to_string(), loc.to_string())])
    }

    /// Certain beliefs matching `values`, fully observed.
    fn run(d: &Domain, priors: &mut PriorSet, values: &[usize], loc: &str) -> SelectorVerdict {
        let prior: Vec<Categorical<f64>> = d
            .registry
            .ids()
            .map(|s| predict(&Categorical::one_hot(d.registry.get(s).m(), values[s.0]), None))
            .collect();
        let obs: Vec<Option<usize>> = values.iter().map(|&v| Some(v)).collect();
        let logical = LogicalState::new(values.to_vec());
        let ev = Evidence { prior: &prior, observations: &obs, logical: &logical };
        adaptive_select(d, priors, 7, &bind(loc), &ev).unwrap()
    }

    fn targets(d: &Domain, texts: &[&str]) -> Vec<Predicate> {
        texts.iter().map(|t| Predicate::parse(&d.registry, t).unwrap()).collect()
    }

    #[test]
    fn unreachable_object_pushes_reachability() {
        let d = domain();
        let mut priors = PriorSet::new();
        priors.set_nominal(7, &targets(&d, &["isHolding"]));
        // at table, not holding, not reachable
        let v = run(&d, &mut priors, &[0, 1, 1, 1, 0], "shelf");
        assert_eq!(v.status, TickStatus::Running);
        assert_eq!(v.action.as_ref().unwrap().label(), "moveTo(shelf)");
        assert_eq!(v.rounds[0].selected, "Pick");
        assert_eq!(v.rounds[0].blocked, vec!["isReachable"]);
        assert_eq!(v.pushed, targets(&d, &["isReachable"]));
        assert_eq!(v.rounds[1].preferences[2], vec![2.0, 0.0]);
        assert!(!v.rounds[1].candidates.contains(&"Pick".to_string()));
        let reach = d.registry.lookup("isReachable").unwrap();
        assert_eq!(priors.assemble(&d.registry, reach, Some(7)).values(), &[2.0, 0.0]);

        // once reachable the push is removed and Pick runs
        let v = run(&d, &mut priors, &[1, 1, 0, 1, 0], "shelf");
        assert_eq!(v.removed, targets(&d, &["isReachable"]));
        assert_eq!(v.action.unwrap().label(), "Pick");
        assert!(!priors.has_pushed());
    }

    #[test]
    fn satisfied_target_succeeds() {
        let d = domain();
        let mut priors = PriorSet::new();
        priors.set_nominal(7, &targets(&d, &["isHolding"]));
        let v = run(&d, &mut priors, &[1, 0, 0, 1, 0], "shelf");
        assert_eq!(v.status, TickStatus::Success);
        assert!(v.action.is_none());
        assert_eq!(v.rounds.len(), 1);
        assert_eq!(v.rounds[0].selected, IDLE);
    }

    #[test]
    fn occupied_location_resolves_through_conflict() {
        let d = domain();
        let mut priors = PriorSet::new();
        priors.set_nominal(7, &targets(&d, &["isHolding", "isAt=table", "isPlacedAt"]));
        // at table, holding, reachable, not placed, location occupied
        let v = run(&d, &mut priors, &[0, 0, 0, 1, 1], "table");
        let selected: Vec<&str> = v.rounds.iter().map(|r| r.selected.as_str()).collect();
        assert_eq!(selected, ["Place", "Push", "PlaceOnPlate"]);
        assert_eq!(v.status, TickStatus::Running);
        assert_eq!(v.action.as_ref().unwrap().name, "PlaceOnPlate");
        assert_eq!(v.rounds[2].preferences[1], vec![1.0, 2.0]);

        let chains = chain_trace([(0, &v)]);
        assert_eq!(chains.len(), 1);
        assert_eq!(chains[0].actions, ["Place", "Push", "PlaceOnPlate"]);
        let get = |n: &str| d.ground(d.action_id(n).unwrap(), &bind("table")).unwrap();
        for (a, b) in &chains[0].links {
            assert!(prepares(&get(a), &get(b)), "{b} should prepare {a}");
        }
    }

    #[test]
    fn exhausted_candidates_fail() {
        let d = domain();
        let mut priors = PriorSet::new();
        priors.set_nominal(7, &targets(&d, &["isLocationFree"]));
        // without PlaceOnPlate nothing frees the gripper that Push needs
        let reduced = Domain::new(d.registry.clone(), d.actions[..5].to_vec()).unwrap();
        let v = run(&reduced, &mut priors, &[0, 0, 0, 1, 1], "table");
        assert_eq!(v.status, TickStatus::Failure);
        assert!(v.action.is_none());
        assert!(v.rounds.len() > 1);
        assert_eq!(v.rounds.last().unwrap().selected, IDLE);
    }

    #[test]
    fn prepares_relation() {
        let d = domain();
        let get = |n: &str, loc: &str| d.ground(d.action_id(n).unwrap(), &bind(loc)).unwrap();
        assert!(prepares(&get("Pick", "shelf"), &get("moveTo", "shelf")));
        assert!(prepares(&get("Place", "table"), &get("Push", "table")));
        assert!(prepares(&get("Push", "table"), &get("PlaceOnPlate", "table")));
        // picking leaves the gripper full, which Push cannot start from
        assert!(!prepares(&get("Push", "shelf"), &get("Pick", "shelf")));
        assert!(!prepares(&get("Pick", "shelf"), &get("Push", "shelf")));
    }

    #[test]
    fn chains_split_and_deduplicate() {
        let round = |sel: &str, blocked: &[&str]| SelectorRound {
            candidates: vec![],
            preferences: vec![],
            free_energy: vec![],
            expected_free_energy: vec![],
            policy_probs: vec![],
            selected: sel.into(),
            blocked: blocked.iter().map(|s| s.to_string()).collect(),
        };
        let verdict = |active: bool, pushed: usize, rounds: Vec<SelectorRound>| SelectorVerdict {
            owner: 0,
            status: TickStatus::Running,
            action: None,
            active_at_start: active,
            pushed: vec![Predicate { state: StateId(0), index: 0 }; pushed],
            removed: vec![],
            rounds,
        };
        let vs = [
            verdict(false, 0, vec![round("moveTo(shelf)", &[])]),
            verdict(false, 0, vec![round("moveTo(shelf)", &[])]),
            verdict(false, 1, vec![round("Pick", &["isReachable"]), round("moveTo(shelf)", &[])]),
            verdict(true, 0, vec![round("moveTo(shelf)", &[])]),
            verdict(false, 0, vec![round("Pick", &[])]),
        ];
        let chains = chain_trace(vs.iter().enumerate().map(|(i, v)| (i as u64, v)));
        let actions: Vec<Vec<String>> = chains.iter().map(|c| c.actions.clone()).collect();
        assert_eq!(
            actions,
            vec![vec!["moveTo(shelf)".to_string()], vec!["Pick".into(), "moveTo(shelf)".into()], vec!["Pick".into()]]
        );
        assert_eq!(chains[1].links, vec![("Pick".to_string(), "moveTo(shelf)".to_string())]);
        assert_eq!(chains[1].start_tick, 2);
    }
}
