use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use super::{DomainError, Predicate, Result, StateId, StateRegistry};
use crate::inference::{ActionId, TransitionMatrix};

/// Name of the no-op action that signals that nothing needs to change.
pub const IDLE: &str = "Idle";

pub const DEFAULT_DURATION: u32 = 3;

/// Probability with which a derived transition moves a state to its postcondition.
pub const DEFAULT_RELIABILITY: f64 = 0.9;

/// Value a postcondition assigns: a fixed index, or the label bound to a parameter.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum PostValue {
    Index(usize),
    Param(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Postcondition {
    pub state: StateId,
    pub value: PostValue,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ActionTemplate {
    pub name: String,
    pub params: Vec<String>,
    pub preconditions: Vec<Predicate>,
    pub postconditions: Vec<Postcondition>,
    /// Declared transitions; postconditions without one get a derived matrix.
    pub transitions: BTreeMap<StateId, TransitionMatrix<f64>>,
    pub duration_ticks: u32,
    pub reliability: f64,
}

impl ActionTemplate {
    pub fn new(name: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            params: Vec::new(),
            preconditions: Vec::new(),
            postconditions: Vec::new(),
            transitions: BTreeMap::new(),
            duration_ticks: DEFAULT_DURATION,
            reliability: DEFAULT_RELIABILITY,
        }
    }

    pub fn is_idle(&self) -> bool {
        self.name == IDLE
    }

    fn invalid(&self, reason: impl Into<String>) -> DomainError {
        DomainError::InvalidAction { action: self.name.clone(), reason: reason.into() }
    }

    pub fn validate(&self, registry: &StateRegistry) -> Result<()> {
        if self.duration_ticks == 0 {
            return Err(self.invalid("duration must be at least one tick"));
        }
        if !(self.reliability > 0.0 && self.reliability <= 1.0) {
            return Err(self.invalid("reliability must lie in (0, 1]"));
        }
        for (i, p) in self.params.iter().enumerate() {
            if self.params[..i].contains(p) {
                return Err(self.invalid(format!("parameter `{p}` declared twice")));
            }
        }
        for pred in &self.preconditions {
            Predicate::new(registry, pred.state, pred.index)?;
        }
        for (i, post) in self.postconditions.iter().enumerate() {
            let var = registry.get(post.state);
            if self.postconditions[..i].iter().any(|q| q.state == post.state) {
                return Err(self.invalid(format!("two postconditions on `{}`", var.id)));
            }
            match &post.value {
                PostValue::Index(index) => {
                    Predicate::new(registry, post.state, *index)?;
                }
                PostValue::Param(param) => {
                    if !self.params.contains(param) {
                        return Err(self.invalid(format!("postcondition uses undeclared `${param}`")));
                    }
                }
            }
        }
        for (state, b) in &self.transitions {
            let var = registry.get(*state);
            let post = self.postconditions.iter().find(|p| p.state == *state).ok_or_else(|| {
                self.invalid(format!("transition on `{}` without a postcondition", var.id))
            })?;
            if b.size() != var.m() {
                return Err(self.invalid(format!("transition on `{}` must be {}x{}", var.id, var.m(), var.m())));
            }
            match post.value {
                PostValue::Index(index) if b.dominant_target() == Some(index) => {}
                PostValue::Index(_) => {
                    return Err(self.invalid(format!(
                        "transition on `{}` does not move mass toward the postcondition",
                        var.id
                    )))
                }
                PostValue::Param(_) => {
                    return Err(self.invalid(format!(
                        "postcondition on `{}` depends on a parameter; its transition is derived",
                        var.id
                    )))
                }
            }
        }
        if self.is_idle() && !(self.preconditions.is_empty() && self.postconditions.is_empty()) {
            return Err(self.invalid("Idle takes no pre- or postconditions"));
        }
        Ok(())
    }

    /// Binds parameters from `bindings` and resolves every postcondition.
    pub fn ground(
        &self,
        id: ActionId,
        registry: &StateRegistry,
        bindings: &BTreeMap<String, String>,
    ) -> Result<GroundAction> {
        let args: BTreeMap<String, String> = self
            .params
            .iter()
            .filter_map(|p| bindings.get(p).map(|v| (p.clone(), v.clone())))
            .collect();
        let mut postconditions = Vec::with_capacity(self.postconditions.len());
        let mut transitions = Vec::with_capacity(self.postconditions.len());
        for post in &self.postconditions {
            let index = match &post.value {
                PostValue::Index(i) => *i,
                PostValue::Param(p) => {
                    let label = args.get(p).ok_or_else(|| DomainError::UnboundParameter {
                        action: self.name.clone(),
                        param: p.clone(),
                    })?;
                    registry.value(post.state, label)?
                }
            };
            let b = match self.transitions.get(&post.state) {
                Some(b) => b.clone(),
                None => TransitionMatrix::toward(registry.get(post.state).m(), index, self.reliability)?,
            };
            postconditions.push(Predicate { state: post.state, index });
            transitions.push((post.state, b));
        }
        Ok(GroundAction {
            id,
            name: self.name.clone(),
            params: self.params.clone(),
            args,
            preconditions: self.preconditions.clone(),
            postconditions,
            transitions,
            duration_ticks: self.duration_ticks,
        })
    }
}

/// An action template with its parameters bound.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundAction {
    pub id: ActionId,
    pub name: String,
    params: Vec<String>,
    pub args: BTreeMap<String, String>,
    pub preconditions: Vec<Predicate>,
    pub postconditions: Vec<Predicate>,
    transitions: Vec<(StateId, TransitionMatrix<f64>)>,
    pub duration_ticks: u32,
}

impl GroundAction {
    pub fn is_idle(&self) -> bool {
        self.name == IDLE
    }

    /// Transition acting on `state`, if this action affects it.
    pub fn transition(&self, state: StateId) -> Option<&TransitionMatrix<f64>> {
        self.transitions.iter().find(|(s, _)| *s == state).map(|(_, b)| b)
    }

    /// Probability that the action reaches all of its postconditions: the weakest
    /// transition column toward any of them.
    pub fn success_probability(&self) -> f64 {
        self.postconditions
            .iter()
            .zip(&self.transitions)
            .map(|(post, (_, b))| b.reach_probability(post.index))
            .fold(1.0, f64::min)
    }

    /// Same template and same bound arguments.
    pub fn same_as(&self, other: &GroundAction) -> bool {
        self.id == other.id && self.args == other.args
    }

    pub fn label(&self) -> String {
        self.to_string()
    }
}

impl fmt::Display for GroundAction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name)?;
        if self.params.is_empty() {
            return Ok(());
        }
        let shown: Vec<&str> = self
            .params
            .iter()
            .map(|p| self.args.get(p).map_or(p.as_str(), String::as_str))
            .collect();
        write!(f, "({})", shown.join(", "))
    }
}

/// Registered states plus the available action templates, Idle first.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Domain {
    pub registry: StateRegistry,
    pub actions: Vec<ActionTemplate>,
}

impl Domain {
    pub fn new(registry: StateRegistry, actions: Vec<ActionTemplate>) -> Result<Self> {
        match actions.first() {
            Some(a) if a.is_idle() => {}
            _ => {
                return Err(DomainError::InvalidAction {
                    action: IDLE.into(),
                    reason: "Idle must be declared as the first action".into(),
                })
            }
        }
        for (i, a) in actions.iter().enumerate() {
            if actions[..i].iter().any(|b| b.name == a.name) {
                return Err(DomainError::InvalidAction {
                    action: a.name.clone(),
                    reason: "declared twice".into(),
                });
            }
            a.validate(&registry)?;
        }
        Ok(Self { registry, actions })
    }

    pub fn action_id(&self, name: &str) -> Result<ActionId> {
        self.actions
            .iter()
            .position(|a| a.name == name)
            .map(ActionId)
            .ok_or_else(|| DomainError::UnknownAction(name.to_string()))
    }

    pub fn template(&self, id: ActionId) -> &ActionTemplate {
        &self.actions[id.0]
    }

    pub fn ground(&self, id: ActionId, bindings: &BTreeMap<String, String>) -> Result<GroundAction> {
        self.template(id).ground(id, &self.registry, bindings)
    }

    /// Every action that can be grounded with `bindings`, in declaration order.
    pub fn candidates(&self, bindings: &BTreeMap<String, String>) -> Vec<GroundAction> {
        (0..self.actions.len()).filter_map(|i| self.ground(ActionId(i), bindings).ok()).collect()
    }
}
