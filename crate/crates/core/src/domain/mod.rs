//! Symbolic world model: state registry, predicates, logical states, action
//! templates and the preference set shared by prior nodes.

mod action;
mod belief;
mod priors;

pub use action::{ActionTemplate, Domain, GroundAction, PostValue, Postcondition, DEFAULT_DURATION, DEFAULT_RELIABILITY, IDLE};
pub use belief::{correct, logical_state, observation_vector, predict, update_beliefs};
pub use priors::{PriorSet, NOMINAL_PREFERENCE, PUSHED_PREFERENCE};

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::inference::InferenceError;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DomainError {
    #[error("unknown state `{0}`")]
    UnknownState(String),

    #[error("state `{state}` has no value `{label}`")]
    UnknownLabel { state: String, label: String },

    #[error("index {index} out of range for state `{state}` with {m} values")]
    IndexOutOfRange { state: String, index: usize, m: usize },

    #[error("invalid state declaration: {0}")]
    InvalidState(String),

    #[error("`!{0}` needs a two-valued state")]
    NegatedMultiValued(String),

    #[error("invalid action `{action}`: {reason}")]
    InvalidAction { action: String, reason: String },

    #[error("unknown action `{0}`")]
    UnknownAction(String),

    #[error("action `{action}` has no binding for parameter `{param}`")]
    UnboundParameter { action: String, param: String },

    #[error(transparent)]
    Inference(#[from] InferenceError),
}

pub type Result<T> = std::result::Result<T, DomainError>;

/// Index of a registered state.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct StateId(pub usize);

/// A symbolic state with `m` mutually exclusive values.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StateVar {
    pub id: String,
    pub labels: Vec<String>,
}

impl StateVar {
    /// Two-valued state whose index 0 means the predicate holds.
    pub fn boolean(id: impl Into<String>) -> Self {
        Self { id: id.into(), labels: vec!["true".into(), "false".into()] }
    }

    #[inline]
    pub fn m(&self) -> usize {
        self.labels.len()
    }

    pub fn label_index(&self, label: &str) -> Option<usize> {
        self.labels.iter().position(|l| l == label)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct StateRegistry {
    vars: Vec<StateVar>,
}

impl StateRegistry {
    pub fn new(vars: Vec<StateVar>) -> Result<Self> {
        for (i, v) in vars.iter().enumerate() {
            if v.id.is_empty() {
                return Err(DomainError::InvalidState("empty state id".into()));
            }
            if vars[..i].iter().any(|other| other.id == v.id) {
                return Err(DomainError::InvalidState(format!("state `{}` declared twice", v.id)));
            }
            if v.m() < 2 {
                return Err(DomainError::InvalidState(format!(
                    "state `{}` needs at least two values",
                    v.id
                )));
            }
            if let Some(dup) = v.labels.iter().enumerate().find(|(j, l)| v.labels[..*j].contains(l)) {
                return Err(DomainError::InvalidState(format!(
                    "state `{}` repeats value `{}`",
                    v.id, dup.1
                )));
            }
        }
        Ok(Self { vars })
    }

    pub fn lookup(&self, id: &str) -> Result<StateId> {
        self.vars
            .iter()
            .position(|v| v.id == id)
            .map(StateId)
            .ok_or_else(|| DomainError::UnknownState(id.to_string()))
    }

    #[inline]
    pub fn get(&self, id: StateId) -> &StateVar {
        &self.vars[id.0]
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.vars.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.vars.is_empty()
    }

    pub fn ids(&self) -> impl Iterator<Item = StateId> {
        (0..self.vars.len()).map(StateId)
    }

    pub fn vars(&self) -> &[StateVar] {
        &self.vars
    }

    /// Resolves `label` of state `id` to its index.
    pub fn value(&self, id: StateId, label: &str) -> Result<usize> {
        let var = self.get(id);
        var.label_index(label).ok_or_else(|| DomainError::UnknownLabel {
            state: var.id.clone(),
            label: label.to_string(),
        })
    }
}

/// `state == index`, evaluated against the logical state.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Predicate {
    pub state: StateId,
    pub index: usize,
}

impl Predicate {
    pub fn new(registry: &StateRegistry, state: StateId, index: usize) -> Result<Self> {
        let var = registry.get(state);
        if index >= var.m() {
            return Err(DomainError::IndexOutOfRange { state: var.id.clone(), index, m: var.m() });
        }
        Ok(Self { state, index })
    }

    /// Parses `isX` (index 0), `!isX` (index 1 of a two-valued state) or `isX=label`.
    pub fn parse(registry: &StateRegistry, text: &str) -> Result<Self> {
        let text = text.trim();
        if let Some((id, label)) = text.split_once('=') {
            let state = registry.lookup(id.trim())?;
            let index = registry.value(state, label.trim())?;
            return Ok(Self { state, index });
        }
        if let Some(id) = text.strip_prefix('!') {
            let state = registry.lookup(id.trim())?;
            if registry.get(state).m() != 2 {
                return Err(DomainError::NegatedMultiValued(id.trim().to_string()));
            }
            return Ok(Self { state, index: 1 });
        }
        Ok(Self { state: registry.lookup(text)?, index: 0 })
    }

    /// Canonical text form accepted by [`Predicate::parse`].
    pub fn display<'a>(&'a self, registry: &'a StateRegistry) -> PredicateDisplay<'a> {
        PredicateDisplay { predicate: self, registry }
    }
}

pub struct PredicateDisplay<'a> {
    predicate: &'a Predicate,
    registry: &'a StateRegistry,
}

impl fmt::Display for PredicateDisplay<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let var = self.registry.get(self.predicate.state);
        let is_boolean = var.labels == ["true", "false"];
        match self.predicate.index {
            0 if is_boolean => write!(f, "{}", var.id),
            1 if is_boolean => write!(f, "!{}", var.id),
            i => write!(f, "{}={}", var.id, var.labels[i]),
        }
    }
}

/// Most probable value of every state.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct LogicalState(Vec<usize>);

impl LogicalState {
    pub fn new(values: Vec<usize>) -> Self {
        Self(values)
    }

    #[inline]
    pub fn values(&self) -> &[usize] {
        &self.0
    }

    #[inline]
    pub fn value(&self, state: StateId) -> usize {
        self.0[state.0]
    }

    /// One-hot encoding of state `state` with `m` values.
    pub fn one_hot(&self, state: StateId, m: usize) -> Vec<u8> {
        let mut v = vec![0; m];
        v[self.0[state.0]] = 1;
        v
    }

    pub fn holds(&self, registry: &StateRegistry, pred: &Predicate) -> Result<bool> {
        if pred.state.0 >= registry.len() || pred.state.0 >= self.0.len() {
            return Err(DomainError::UnknownState(format!("#{}", pred.state.0)));
        }
        let var = registry.get(pred.state);
        if pred.index >= var.m() {
            return Err(DomainError::IndexOutOfRange {
                state: var.id.clone(),
                index: pred.index,
                m: var.m(),
            });
        }
        Ok(self.0[pred.state.0] == pred.index)
    }
}
