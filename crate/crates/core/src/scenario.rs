//! Scenario files: TOML with a version header line.
//!
//! ```toml
//! # aibt-scenario v1
//! name = "pick_and_place"
//! seed = 7
//! budget_ticks = 100
//!
//! [[states]]
//! id = "isAt"
//! labels = ["table", "shelf"]
//!
//! [[actions]]
//! name = "moveTo"
//! params = ["loc"]
//! post = ["isAt=$loc", "isReachable"]
//!
//! [bt]
//! tree = """
//! prior isAt=table {loc=table}
//! """
//!
//! [world]
//! fluents = { isAt = "shelf" }
//! ```

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::btree::{parse_tree, write_tree, Tree};
use crate::domain::{
    ActionTemplate, Domain, DomainError, PostValue, Postcondition, Predicate, StateId, StateRegistry, StateVar,
    DEFAULT_DURATION, DEFAULT_RELIABILITY,
};
use crate::inference::TransitionMatrix;
use crate::sim::{PerturbationEvent, SimError, World};

pub const HEADER: &str = "# aibt-scenario v1";

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub struct ScenarioError {
    pub file: String,
    pub line: Option<usize>,
    pub message: String,
}

impl fmt::Display for ScenarioError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.line {
            Some(line) => write!(f, "{}:{}: {}", self.file, line, self.message),
            None => write!(f, "{}: {}", self.file, self.message),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
enum RawLabel {
    Bool(bool),
    Text(String),
}

impl RawLabel {
    fn text(&self) -> String {
        match self {
            Self::Bool(b) => b.to_string(),
            Self::Text(s) => s.clone(),
        }
    }
}

fn default_labels() -> Vec<String> {
    vec!["true".into(), "false".into()]
}

fn is_default_labels(labels: &[String]) -> bool {
    labels == default_labels()
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawState {
    id: String,
    #[serde(default = "default_labels", skip_serializing_if = "is_default_labels")]
    labels: Vec<String>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawAction {
    name: String,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    params: Vec<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pre: Vec<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    post: Vec<String>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    transitions: BTreeMap<String, Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    duration: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    reliability: Option<f64>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawTree {
    tree: String,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawWorld {
    fluents: BTreeMap<String, RawLabel>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    unobservable: Vec<String>,
    #[serde(default)]
    noise_p: f64,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawPerturbation {
    at_tick: u64,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    set: BTreeMap<String, RawLabel>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    observable: BTreeMap<String, bool>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawScenario {
    name: String,
    seed: u64,
    budget_ticks: u64,
    #[serde(default)]
    deterministic: bool,
    states: Vec<RawState>,
    actions: Vec<RawAction>,
    bt: RawTree,
    world: RawWorld,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    perturbations: Vec<RawPerturbation>,
}

/// A validated scenario.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub name: String,
    pub seed: u64,
    pub budget_ticks: u64,
    pub deterministic: bool,
    pub domain: Domain,
    pub tree: Tree,
    pub fluents: Vec<usize>,
    pub observable: Vec<bool>,
    pub noise_p: f64,
    pub perturbations: Vec<PerturbationEvent>,
}

/// Maps problems back to lines of the source text.
struct Source<'a> {
    file: &'a str,
    text: &'a str,
}

impl Source<'_> {
    fn error(&self, line: Option<usize>, message: impl Into<String>) -> ScenarioError {
        ScenarioError { file: self.file.to_string(), line, message: message.into() }
    }

    /// Line of the `nth` occurrence of the table header `section`.
    fn section(&self, section: &str, nth: usize) -> Option<usize> {
        self.text
            .lines()
            .enumerate()
            .filter(|(_, l)| l.trim() == section)
            .nth(nth)
            .map(|(i, _)| i + 1)
    }

    /// First line at or after `from` mentioning `needle`, preferring a quoted mention.
    fn find(&self, from: usize, needle: &str) -> Option<usize> {
        let quoted = format!("\"{needle}\"");
        let lines: Vec<&str> = self.text.lines().collect();
        let start = from.saturating_sub(1);
        let search = |pat: &str| {
            lines.iter().enumerate().skip(start).find(|(_, l)| l.contains(pat)).map(|(i, _)| i + 1)
        };
        search(&quoted).or_else(|| search(needle))
    }

    fn at(&self, section: &str, nth: usize, needle: &str, message: impl Into<String>) -> ScenarioError {
        let from = self.section(section, nth);
        let line = self.find(from.unwrap_or(1), needle).or(from);
        self.error(line, message)
    }

    fn key(&self, key: &str, message: impl Into<String>) -> ScenarioError {
        let line = self
            .text
            .lines()
            .position(|l| l.trim_start().starts_with(key) && l.contains('='))
            .map(|i| i + 1);
        self.error(line, message)
    }
}

fn line_of_offset(text: &str, offset: usize) -> usize {
    text[..offset.min(text.len())].matches('\n').count() + 1
}

fn domain_needle(err: &DomainError) -> String {
    match err {
        DomainError::UnknownState(s) | DomainError::UnknownAction(s) | DomainError::NegatedMultiValued(s) => s.clone(),
        DomainError::UnknownLabel { label, .. } => label.clone(),
        DomainError::IndexOutOfRange { state, .. } => state.clone(),
        DomainError::InvalidAction { action, .. } | DomainError::UnboundParameter { action, .. } => action.clone(),
        DomainError::InvalidState(_) | DomainError::Inference(_) => String::new(),
    }
}

impl Scenario {
    pub fn from_path(path: impl AsRef<Path>) -> Result<Self, ScenarioError> {
        let path = path.as_ref();
        let file = path.display().to_string();
        let text = std::fs::read_to_string(path)
            .map_err(|e| ScenarioError { file: file.clone(), line: None, message: e.to_string() })?;
        Self::parse(&text, &file)
    }

    /// Parses and validates scenario text; `file` is used in diagnostics.
    pub fn parse(text: &str, file: &str) -> Result<Self, ScenarioError> {
        let src = Source { file, text };
        if text.lines().next().map(str::trim) != Some(HEADER) {
            return Err(src.error(Some(1), format!("first line must be `{HEADER}`")));
        }
        let raw: RawScenario = toml::from_str(text).map_err(|e| {
            let line = e.span().map(|s| line_of_offset(text, s.start));
            src.error(line, e.message().trim().to_string())
        })?;
        if raw.budget_ticks == 0 {
            return Err(src.key("budget_ticks", "budget_ticks must be at least 1"));
        }

        let vars: Vec<StateVar> = raw.states.iter().map(|s| StateVar { id: s.id.clone(), labels: s.labels.clone() }).collect();
        let registry = StateRegistry::new(vars).map_err(|e| {
            let needle = match &e {
                DomainError::InvalidState(msg) => raw
                    .states
                    .iter()
                    .map(|s| s.id.as_str())
                    .find(|id| msg.contains(&format!("`{id}`")))
                    .unwrap_or("")
                    .to_string(),
                other => domain_needle(other),
            };
            src.at("[[states]]", 0, &needle, e.to_string())
        })?;

        let mut actions = Vec::with_capacity(raw.actions.len());
        for (i, a) in raw.actions.iter().enumerate() {
            let fail = |needle: &str, e: &dyn fmt::Display| src.at("[[actions]]", i, needle, format!("action `{}`: {e}", a.name));
            let mut template = ActionTemplate::new(a.name.clone());
            template.params = a.params.clone();
            for text in &a.pre {
                template.preconditions.push(Predicate::parse(&registry, text).map_err(|e| fail(text, &e))?);
            }
            for text in &a.post {
                template.postconditions.push(parse_post(&registry, text).map_err(|e| fail(text, &e))?);
            }
            for (state, rows) in &a.transitions {
                let id = registry.lookup(state).map_err(|e| fail(state, &e))?;
                let b = TransitionMatrix::from_rows(rows.clone()).map_err(|e| fail(state, &e))?;
                template.transitions.insert(id, b);
            }
            template.duration_ticks = a.duration.unwrap_or(DEFAULT_DURATION);
            template.reliability = a.reliability.unwrap_or(DEFAULT_RELIABILITY);
            actions.push(template);
        }
        let domain = Domain::new(registry, actions).map_err(|e| {
            let needle = domain_needle(&e);
            let nth = raw.actions.iter().position(|a| a.name == needle).unwrap_or(0);
            src.at("[[actions]]", nth, &needle, e.to_string())
        })?;
        let registry = &domain.registry;

        let tree = parse_tree(&raw.bt.tree, &domain).map_err(|e| {
            let tree_key = text
                .lines()
                .position(|l| l.trim_start().starts_with("tree") && l.contains('='))
                .map(|i| i + 1);
            let line = tree_key.map(|k| {
                let first = text.lines().nth(k - 1).unwrap_or("");
                let starts_below = first.split_once("\"\"\"").is_some_and(|(_, rest)| rest.trim().is_empty());
                if starts_below {
                    k + e.line
                } else {
                    k + e.line - 1
                }
            });
            src.error(line, format!("behavior tree: {}", e.message))
        })?;

        let mut fluents = vec![None; registry.len()];
        for (state, label) in &raw.world.fluents {
            let id = registry.lookup(state).map_err(|e| src.at("[world]", 0, state, e.to_string()))?;
            let index = registry.value(id, &label.text()).map_err(|e| src.at("[world]", 0, state, e.to_string()))?;
            fluents[id.0] = Some(index);
        }
        let fluents = fluents
            .iter()
            .enumerate()
            .map(|(i, f)| {
                f.ok_or_else(|| {
                    src.at("[world]", 0, "fluents", format!("no initial value for state `{}`", registry.get(StateId(i)).id))
                })
            })
            .collect::<Result<Vec<_>, _>>()?;
        let mut observable = vec![true; registry.len()];
        for state in &raw.world.unobservable {
            let id = registry.lookup(state).map_err(|e| src.at("[world]", 0, state, e.to_string()))?;
            observable[id.0] = false;
        }
        if !(0.0..=1.0).contains(&raw.world.noise_p) {
            return Err(src.key("noise_p", "noise_p must lie in [0, 1]"));
        }

        let mut perturbations = Vec::with_capacity(raw.perturbations.len());
        for (i, p) in raw.perturbations.iter().enumerate() {
            let fail = |needle: &str, msg: String| src.at("[[perturbations]]", i, needle, msg);
            if i > 0 && raw.perturbations[i - 1].at_tick > p.at_tick {
                return Err(fail("at_tick", "perturbations must be listed in tick order".into()));
            }
            let mut event = PerturbationEvent { at_tick: p.at_tick, assignments: Vec::new(), observability: Vec::new() };
            for (state, label) in &p.set {
                let id = registry.lookup(state).map_err(|e| fail(state, e.to_string()))?;
                let index = registry.value(id, &label.text()).map_err(|e| fail(state, e.to_string()))?;
                event.assignments.push((id, index));
            }
            for (state, &o) in &p.observable {
                let id = registry.lookup(state).map_err(|e| fail(state, e.to_string()))?;
                event.observability.push((id, o));
            }
            perturbations.push(event);
        }

        Ok(Self {
            name: raw.name,
            seed: raw.seed,
            budget_ticks: raw.budget_ticks,
            deterministic: raw.deterministic,
            domain,
            tree,
            fluents,
            observable,
            noise_p: raw.world.noise_p,
            perturbations,
        })
    }

    /// Canonical text, accepted by [`Scenario::parse`].
    pub fn to_toml(&self) -> String {
        let reg = &self.domain.registry;
        let label = |s: StateId, index: usize| {
            let var = reg.get(s);
            if is_default_labels(&var.labels) {
                RawLabel::Bool(index == 0)
            } else {
                RawLabel::Text(var.labels[index].clone())
            }
        };
        let raw = RawScenario {
            name: self.name.clone(),
            seed: self.seed,
            budget_ticks: self.budget_ticks,
            deterministic: self.deterministic,
            states: reg.vars().iter().map(|v| RawState { id: v.id.clone(), labels: v.labels.clone() }).collect(),
            actions: self
                .domain
                .actions
                .iter()
                .map(|a| RawAction {
                    name: a.name.clone(),
                    params: a.params.clone(),
                    pre: a.preconditions.iter().map(|p| p.display(reg).to_string()).collect(),
                    post: a
                        .postconditions
                        .iter()
                        .map(|p| match &p.value {
                            PostValue::Index(i) => Predicate { state: p.state, index: *i }.display(reg).to_string(),
                            PostValue::Param(param) => format!("{}=${param}", reg.get(p.state).id),
                        })
                        .collect(),
                    transitions: a.transitions.iter().map(|(s, b)| (reg.get(*s).id.clone(), b.matrix().to_rows())).collect(),
                    duration: Some(a.duration_ticks),
                    reliability: Some(a.reliability),
                })
                .collect(),
            bt: RawTree { tree: write_tree(&self.tree, &self.domain) },
            world: RawWorld {
                fluents: reg.ids().map(|s| (reg.get(s).id.clone(), label(s, self.fluents[s.0]))).collect(),
                unobservable: reg.ids().filter(|s| !self.observable[s.0]).map(|s| reg.get(s).id.clone()).collect(),
                noise_p: self.noise_p,
            },
            perturbations: self
                .perturbations
                .iter()
                .map(|e| RawPerturbation {
                    at_tick: e.at_tick,
                    set: e.assignments.iter().map(|&(s, i)| (reg.get(s).id.clone(), label(s, i))).collect(),
                    observable: e.observability.iter().map(|&(s, o)| (reg.get(s).id.clone(), o)).collect(),
                })
                .collect(),
        };
        let body = toml::to_string(&raw).expect("scenario values are representable in TOML");
        format!("{HEADER}\n{body}")
    }

    pub fn world(&self, seed: u64, deterministic: bool) -> Result<World, SimError> {
        World::new(
            self.domain.registry.clone(),
            self.fluents.clone(),
            self.observable.clone(),
            self.noise_p,
            seed,
            deterministic,
            self.perturbations.clone(),
        )
    }
}

/// `isX`, `!isX`, `isX=label` or `isX=$param`.
fn parse_post(registry: &StateRegistry, text: &str) -> Result<Postcondition, DomainError> {
    if let Some((state, param)) = text.split_once("=$") {
        let state = registry.lookup(state.trim())?;
        return Ok(Postcondition { state, value: PostValue::Param(param.trim().to_string()) });
    }
    let p = Predicate::parse(registry, text)?;
    Ok(Postcondition { state: p.state, value: PostValue::Index(p.index) })
}
