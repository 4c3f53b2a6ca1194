//! Episode loop: observe, update beliefs, tick the tree, execute, step the world.

use std::collections::BTreeMap;
use std::io::Write;

use serde::Serialize;

use crate::btree::{NodeId, NodeKind, TickContext, TickStatus, Visit};
use crate::domain::{logical_state, update_beliefs, Domain, DomainError, GroundAction, LogicalState, Predicate, PriorSet};
use crate::inference::Categorical;
use crate::scenario::Scenario;
use crate::selector::{adaptive_select, chain_trace, Chain, Evidence, SelectorRound, SelectorVerdict};
use crate::sim::Completion;
use crate::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum EpisodeResult {
    Goal,
    Failure,
    Timeout,
}

impl EpisodeResult {
    pub fn exit_code(self) -> i32 {
        match self {
            Self::Goal => 0,
            Self::Failure => 1,
            Self::Timeout => 2,
        }
    }
}

/// Command-line overrides of scenario settings.
#[derive(Debug, Clone, Copy, Default)]
pub struct RunOptions {
    pub seed: Option<u64>,
    pub budget: Option<u64>,
    pub deterministic: Option<bool>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SelectionRecord {
    pub node: NodeId,
    pub status: TickStatus,
    pub action: Option<String>,
    pub active_at_start: bool,
    pub pushed: Vec<String>,
    pub removed: Vec<String>,
    pub rounds: Vec<SelectorRound>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct PriorSnapshot {
    /// `(owner node, predicate)`
    pub nominal: Vec<(NodeId, String)>,
    pub pushed: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CompletionRecord {
    pub action: String,
    pub succeeded: bool,
}

/// Everything that happened in one tick, in a fixed field order.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TickRecord {
    pub tick: u64,
    pub observations: Vec<Option<usize>>,
    /// Prior for this tick before the observation.
    pub predicted: Vec<Vec<f64>>,
    pub beliefs: Vec<Vec<f64>>,
    pub logical: Vec<usize>,
    /// Ground truth when the tick started.
    pub fluents: Vec<usize>,
    pub selections: Vec<SelectionRecord>,
    /// Preferences after the tick.
    pub priors: PriorSnapshot,
    pub visits: Vec<Visit>,
    pub root: TickStatus,
    pub requested: Option<String>,
    pub started: Option<String>,
    pub cancelled: Option<String>,
    /// Action that finished when the world stepped after this tick.
    pub completed: Option<CompletionRecord>,
}

#[derive(Debug, Clone)]
pub struct Episode {
    pub scenario: String,
    pub result: EpisodeResult,
    pub records: Vec<TickRecord>,
    /// Actions in the order they were started.
    pub actions: Vec<GroundAction>,
    pub selections: Vec<(u64, SelectorVerdict)>,
    pub bt_nodes: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Summary {
    pub scenario: String,
    pub result: EpisodeResult,
    pub ticks: usize,
    pub actions: Vec<String>,
    pub chains: Vec<Vec<String>>,
    pub bt_nodes: usize,
}

impl Episode {
    pub fn ticks(&self) -> usize {
        self.records.len()
    }

    pub fn action_labels(&self) -> Vec<String> {
        self.actions.iter().map(GroundAction::label).collect()
    }

    pub fn chains(&self) -> Vec<Chain> {
        chain_trace(self.selections.iter().map(|(t, v)| (*t, v)))
    }

    pub fn summary(&self) -> Summary {
        Summary {
            scenario: self.scenario.clone(),
            result: self.result,
            ticks: self.ticks(),
            actions: self.action_labels(),
            chains: self.chains().into_iter().map(|c| c.actions).collect(),
            bt_nodes: self.bt_nodes,
        }
    }

    /// One JSON object per line.
    pub fn write_trace(&self, mut out: impl Write) -> std::io::Result<()> {
        for r in &self.records {
            serde_json::to_writer(&mut out, r)?;
            out.write_all(b"\n")?;
        }
        Ok(())
    }
}

impl Summary {
    pub fn to_text(&self) -> String {
        let chains: Vec<String> = self.chains.iter().map(|c| format!("{{{}}}", c.join(", "))).collect();
        format!(
            "scenario: {}\nresult: {:?}\nticks: {}\nactions: [{}]\nchains: {}\nbt_nodes: {}\n",
            self.scenario,
            self.result,
            self.ticks,
            self.actions.join(", "),
            chains.join(" "),
            self.bt_nodes
        )
    }
}

fn snapshot(domain: &Domain, priors: &PriorSet) -> PriorSnapshot {
    let reg = &domain.registry;
    PriorSnapshot {
        nominal: priors.nominal().map(|(o, p)| (o, p.display(reg).to_string())).collect(),
        pushed: priors.pushed().map(|p| p.display(reg).to_string()).collect(),
    }
}

/// Leaf semantics for one tick.
struct Agent<'a> {
    domain: &'a Domain,
    priors: &'a mut PriorSet,
    evidence: Evidence<'a>,
    /// Completion from the previous step and the node that requested it.
    completed: Option<(NodeId, Completion)>,
    request: Option<(NodeId, GroundAction)>,
    verdicts: Vec<SelectorVerdict>,
    error: Option<DomainError>,
}

impl TickContext for Agent<'_> {
    fn condition(&mut self, _node: NodeId, pred: &Predicate) -> bool {
        match self.evidence.logical.holds(&self.domain.registry, pred) {
            Ok(b) => b,
            Err(e) => {
                self.error.get_or_insert(e);
                false
            }
        }
    }

    fn action(&mut self, node: NodeId, action: &GroundAction) -> TickStatus {
        if let Some((owner, done)) = &self.completed {
            if *owner == node && done.action.same_as(action) {
                let ok = done.succeeded;
                self.completed = None;
                return if ok { TickStatus::Success } else { TickStatus::Failure };
            }
        }
        self.request = Some((node, action.clone()));
        TickStatus::Running
    }

    fn prior(&mut self, node: NodeId, targets: &[Predicate], params: &BTreeMap<String, String>) -> TickStatus {
        self.priors.set_nominal(node, targets);
        let verdict = match adaptive_select(self.domain, self.priors, node, params, &self.evidence) {
            Ok(v) => v,
            Err(e) => {
                self.error.get_or_insert(e);
                self.priors.clear_owner(node);
                return TickStatus::Failure;
            }
        };
        let status = verdict.status;
        match status {
            TickStatus::Running => {
                let action = verdict.action.clone().expect("a running verdict carries its action");
                self.request = Some((node, action));
            }
            TickStatus::Success => self.priors.clear_owner(node),
            TickStatus::Failure => {
                self.priors.clear_owner(node);
                self.priors.clear_pushed();
            }
        }
        self.verdicts.push(verdict);
        status
    }

    fn halt(&mut self, node: NodeId, kind: &NodeKind) {
        if matches!(kind, NodeKind::Prior { .. }) {
            self.priors.clear_owner(node);
        }
    }
}

fn label_all(domain: &Domain, preds: &[Predicate]) -> Vec<String> {
    preds.iter().map(|p| p.display(&domain.registry).to_string()).collect()
}

pub fn run_episode(scenario: &Scenario, options: RunOptions) -> Result<Episode, Error> {
    let domain = &scenario.domain;
    let registry = &domain.registry;
    let budget = options.budget.unwrap_or(scenario.budget_ticks);
    let mut world = scenario.world(
        options.seed.unwrap_or(scenario.seed),
        options.deterministic.unwrap_or(scenario.deterministic),
    )?;
    let mut tree = scenario.tree.clone();
    tree.reset();
    let mut priors = PriorSet::new();
    let mut beliefs: Vec<Categorical<f64>> = registry.ids().map(|s| Categorical::uniform(registry.get(s).m())).collect();
    let mut completed: Option<(NodeId, Completion)> = None;
    let mut records = Vec::new();
    let mut actions = Vec::new();
    let mut selections = Vec::new();

    let result = loop {
        let tick = world.tick();
        let fluents = world.fluents().to_vec();
        let observations = world.observe();
        let last = completed.as_ref().map(|(_, c)| &c.action);
        let (predicted, posterior) = update_beliefs(registry, &beliefs, &observations, last)?;
        beliefs = posterior;
        let logical: LogicalState = logical_state(&beliefs);

        let mut agent = Agent {
            domain,
            priors: &mut priors,
            evidence: Evidence { prior: &predicted, observations: &observations, logical: &logical },
            completed: completed.take(),
            request: None,
            verdicts: Vec::new(),
            error: None,
        };
        let mut visits = Vec::new();
        let root = tree.tick(&mut agent, &mut visits);
        let Agent { request, verdicts, error, .. } = agent;
        if let Some(e) = error {
            return Err(e.into());
        }

        let mut record = TickRecord {
            tick,
            observations: observations.clone(),
            predicted: predicted.iter().map(|c| c.probs().to_vec()).collect(),
            beliefs: beliefs.iter().map(|c| c.probs().to_vec()).collect(),
            logical: logical.values().to_vec(),
            fluents,
            selections: verdicts
                .iter()
                .map(|v| SelectionRecord {
                    node: v.owner,
                    status: v.status,
                    action: v.action.as_ref().map(GroundAction::label),
                    active_at_start: v.active_at_start,
                    pushed: label_all(domain, &v.pushed),
                    removed: label_all(domain, &v.removed),
                    rounds: v.rounds.clone(),
                })
                .collect(),
            priors: snapshot(domain, &priors),
            visits,
            root,
            requested: request.as_ref().map(|(_, a)| a.label()),
            started: None,
            cancelled: None,
            completed: None,
        };
        selections.extend(verdicts.into_iter().map(|v| (tick, v)));

        let finished = match root {
            TickStatus::Success => Some(EpisodeResult::Goal),
            TickStatus::Failure => Some(EpisodeResult::Failure),
            TickStatus::Running if records.len() as u64 + 1 >= budget => Some(EpisodeResult::Timeout),
            TickStatus::Running => None,
        };
        if let Some(result) = finished {
            records.push(record);
            break result;
        }

        // a request for the running action keeps it going under its latest requester
        let requester = match request {
            Some((node, a)) if world.running().is_some_and(|r| r.action.same_as(&a)) => Some(node),
            request => {
                if let Some(r) = world.cancel() {
                    record.cancelled = Some(r.action.label());
                }
                request
                    .map(|(node, a)| {
                        record.started = Some(a.label());
                        world.start_action(a.clone())?;
                        actions.push(a);
                        Ok::<_, Error>(node)
                    })
                    .transpose()?
            }
        };
        if let Some(done) = world.step() {
            record.completed = Some(CompletionRecord { action: done.action.label(), succeeded: done.succeeded });
            completed = requester.map(|n| (n, done));
        }
        records.push(record);
    };

    Ok(Episode {
        scenario: scenario.name.clone(),
        result,
        records,
        actions,
        selections,
        bt_nodes: tree.len(),
    })
}
