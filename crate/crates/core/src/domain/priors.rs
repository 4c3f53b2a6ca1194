use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{LogicalState, Predicate, StateId, StateRegistry};
use crate::inference::LogPreference;

/// Preference a prior node gives to each of its targets.
pub const NOMINAL_PREFERENCE: f64 = 1.0;

/// Preference given to a missing precondition; outranks the nominal plan.
pub const PUSHED_PREFERENCE: f64 = 2.0;

/// Run-time preferences: nominal targets written by prior nodes and preconditions
/// pushed by the selector.
///
/// Nominal entries are scoped to the node that wrote them. Pushed entries are
/// shared, one per state, and stay until their predicate holds.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct PriorSet {
    nominal: BTreeMap<(usize, StateId), usize>,
    pushed: BTreeMap<StateId, usize>,
}

impl PriorSet {
    pub fn new() -> Self {
        Self::default()
    }

    /// Writes the targets of prior node `owner`, replacing whatever it wrote before.
    pub fn set_nominal(&mut self, owner: usize, targets: &[Predicate]) {
        self.clear_owner(owner);
        for t in targets {
            self.nominal.insert((owner, t.state), t.index);
        }
    }

    pub fn clear_owner(&mut self, owner: usize) {
        self.nominal.retain(|(o, _), _| *o != owner);
    }

    /// Pushes a missing precondition. Returns `false` when it was already pushed.
    pub fn push(&mut self, pred: Predicate) -> bool {
        self.pushed.insert(pred.state, pred.index) != Some(pred.index)
    }

    /// Removes every pushed entry whose predicate holds in `logical`.
    pub fn remove_satisfied(&mut self, logical: &LogicalState) -> Vec<Predicate> {
        let removed: Vec<Predicate> = self
            .pushed()
            .filter(|p| logical.values().get(p.state.0) == Some(&p.index))
            .collect();
        for p in &removed {
            self.pushed.remove(&p.state);
        }
        removed
    }

    pub fn clear_pushed(&mut self) -> Vec<Predicate> {
        let all = self.pushed().collect();
        self.pushed.clear();
        all
    }

    pub fn pushed(&self) -> impl Iterator<Item = Predicate> + '_ {
        self.pushed.iter().map(|(&state, &index)| Predicate { state, index })
    }

    pub fn has_pushed(&self) -> bool {
        !self.pushed.is_empty()
    }

    /// `(owner, target)` for every nominal entry.
    pub fn nominal(&self) -> impl Iterator<Item = (usize, Predicate)> + '_ {
        self.nominal.iter().map(|(&(owner, state), &index)| (owner, Predicate { state, index }))
    }

    /// Preference over `state` as seen by prior node `owner` (all nominal entries
    /// when `owner` is `None`): pushed value where set, else nominal, else 0.
    pub fn assemble(&self, registry: &StateRegistry, state: StateId, owner: Option<usize>) -> LogPreference<f64> {
        let m = registry.get(state).m();
        let mut c = vec![0.0; m];
        for (&(o, s), &index) in &self.nominal {
            if s == state && owner.is_none_or(|w| w == o) {
                c[index] = NOMINAL_PREFERENCE;
            }
        }
        if let Some(&index) = self.pushed.get(&state) {
            c[index] = PUSHED_PREFERENCE;
        }
        LogPreference::new(c).expect("finite preference constants")
    }

    pub fn assemble_all(&self, registry: &StateRegistry, owner: Option<usize>) -> Vec<LogPreference<f64>> {
        registry.ids().map(|s| self.assemble(registry, s, owner)).collect()
    }
}
