//! Behavior trees with Fallback, Sequence, ReactiveSequence, Condition, Action
//! and Prior nodes.
//!
//! Nodes live in an arena in pre-order, so the root is node 0 and node ids match
//! the order in which the tree text lists them.

mod dot;
mod dsl;

pub use dot::export_dot;
pub use dsl::{parse_tree, write_tree, BuildError};

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::domain::{GroundAction, Predicate};

pub type NodeId = usize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum TickStatus {
    Success,
    Running,
    Failure,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum NodeKind {
    Fallback,
    /// Sequence with memory: resumes at the running child.
    Sequence,
    /// Restarts from the first child on every tick.
    ReactiveSequence,
    Condition(Predicate),
    Action(GroundAction),
    Prior { targets: Vec<Predicate>, params: BTreeMap<String, String> },
}

impl NodeKind {
    pub fn is_control(&self) -> bool {
        matches!(self, Self::Fallback | Self::Sequence | Self::ReactiveSequence)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Node {
    pub kind: NodeKind,
    pub children: Vec<NodeId>,
}

/// Node totals by kind.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
pub struct NodeCounts {
    pub total: usize,
    pub control: usize,
    pub condition: usize,
    pub action: usize,
    pub prior: usize,
}

/// A child tick observed during one root tick, in the order nodes were entered.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Visit {
    pub node: NodeId,
    pub status: TickStatus,
}

/// What leaves need from the agent executing the tree.
pub trait TickContext {
    fn condition(&mut self, node: NodeId, pred: &Predicate) -> bool;
    fn action(&mut self, node: NodeId, action: &GroundAction) -> TickStatus;
    fn prior(&mut self, node: NodeId, targets: &[Predicate], params: &BTreeMap<String, String>) -> TickStatus;
    /// Called for a leaf whose ancestor stopped ticking it.
    fn halt(&mut self, _node: NodeId, _kind: &NodeKind) {}
}

#[derive(Debug, Clone)]
pub struct Tree {
    nodes: Vec<Node>,
    memory: Vec<usize>,
}

impl PartialEq for Tree {
    fn eq(&self, other: &Self) -> bool {
        self.nodes == other.nodes
    }
}

impl Tree {
    /// Checks the arena layout: pre-order ids, a single root, control nodes with
    /// children and leaves without.
    pub fn new(nodes: Vec<Node>) -> Result<Self, String> {
        if nodes.is_empty() {
            return Err("tree has no nodes".into());
        }
        let mut parent = vec![None; nodes.len()];
        for (id, node) in nodes.iter().enumerate() {
            match (node.kind.is_control(), node.children.is_empty()) {
                (true, true) => return Err(format!("control node {id} has no children")),
                (false, false) => return Err(format!("leaf node {id} has children")),
                _ => {}
            }
            for &c in &node.children {
                if c <= id || c >= nodes.len() {
                    return Err(format!("node {id} has invalid child {c}"));
                }
                if parent[c].replace(id).is_some() {
                    return Err(format!("node {c} has two parents"));
                }
            }
        }
        if let Some(orphan) = (1..nodes.len()).find(|&i| parent[i].is_none()) {
            return Err(format!("node {orphan} is not reachable from the root"));
        }
        let memory = vec![0; nodes.len()];
        Ok(Self { nodes, memory })
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn node(&self, id: NodeId) -> &Node {
        &self.nodes[id]
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn counts(&self) -> NodeCounts {
        let mut c = NodeCounts { total: self.nodes.len(), ..NodeCounts::default() };
        for n in &self.nodes {
            match n.kind {
                NodeKind::Fallback | NodeKind::Sequence | NodeKind::ReactiveSequence => c.control += 1,
                NodeKind::Condition(_) => c.condition += 1,
                NodeKind::Action(_) => c.action += 1,
                NodeKind::Prior { .. } => c.prior += 1,
            }
        }
        c
    }

    /// Ids of `id` and all its descendants.
    pub fn subtree(&self, id: NodeId) -> Vec<NodeId> {
        let mut out = vec![id];
        let mut i = 0;
        while i < out.len() {
            out.extend(self.nodes[out[i]].children.iter().copied());
            i += 1;
        }
        out.sort_unstable();
        out
    }

    /// Clears sequence memory without notifying the context.
    pub fn reset(&mut self) {
        self.memory.iter_mut().for_each(|m| *m = 0);
    }

    /// Ticks the root once, appending every entered node to `visits`.
    pub fn tick(&mut self, ctx: &mut impl TickContext, visits: &mut Vec<Visit>) -> TickStatus {
        self.tick_node(0, ctx, visits)
    }

    fn tick_node(&mut self, id: NodeId, ctx: &mut impl TickContext, visits: &mut Vec<Visit>) -> TickStatus {
        let slot = visits.len();
        visits.push(Visit { node: id, status: TickStatus::Running });
        let status = match self.nodes[id].kind {
            NodeKind::Fallback => self.tick_fallback(id, ctx, visits),
            NodeKind::Sequence => self.tick_sequence(id, self.memory[id], true, ctx, visits),
            NodeKind::ReactiveSequence => self.tick_sequence(id, 0, false, ctx, visits),
            NodeKind::Condition(ref pred) => {
                if ctx.condition(id, pred) {
                    TickStatus::Success
                } else {
                    TickStatus::Failure
                }
            }
            NodeKind::Action(ref action) => ctx.action(id, action),
            NodeKind::Prior { ref targets, ref params } => ctx.prior(id, targets, params),
        };
        visits[slot].status = status;
        status
    }

    fn tick_fallback(&mut self, id: NodeId, ctx: &mut impl TickContext, visits: &mut Vec<Visit>) -> TickStatus {
        for i in 0..self.nodes[id].children.len() {
            let child = self.nodes[id].children[i];
            match self.tick_node(child, ctx, visits) {
                TickStatus::Failure => continue,
                TickStatus::Running => {
                    self.halt_children(id, i + 1, ctx);
                    return TickStatus::Running;
                }
                TickStatus::Success => {
                    self.halt_children(id, 0, ctx);
                    return TickStatus::Success;
                }
            }
        }
        self.halt_children(id, 0, ctx);
        TickStatus::Failure
    }

    fn tick_sequence(
        &mut self,
        id: NodeId,
        start: usize,
        remember: bool,
        ctx: &mut impl TickContext,
        visits: &mut Vec<Visit>,
    ) -> TickStatus {
        for i in start..self.nodes[id].children.len() {
            let child = self.nodes[id].children[i];
            match self.tick_node(child, ctx, visits) {
                TickStatus::Success => continue,
                TickStatus::Running => {
                    if remember {
                        self.memory[id] = i;
                    }
                    self.halt_children(id, i + 1, ctx);
                    return TickStatus::Running;
                }
                TickStatus::Failure => {
                    self.memory[id] = 0;
                    self.halt_children(id, 0, ctx);
                    return TickStatus::Failure;
                }
            }
        }
        self.memory[id] = 0;
        self.halt_children(id, 0, ctx);
        TickStatus::Success
    }

    fn halt_children(&mut self, id: NodeId, from: usize, ctx: &mut impl TickContext) {
        for i in from..self.nodes[id].children.len() {
            let child = self.nodes[id].children[i];
            self.halt(child, ctx);
        }
    }

    /// Resets `id` and its subtree.
    pub fn halt(&mut self, id: NodeId, ctx: &mut impl TickContext) {
        self.memory[id] = 0;
        if self.nodes[id].kind.is_control() {
            self.halt_children(id, 0, ctx);
        } else {
            ctx.halt(id, &self.nodes[id].kind);
        }
    }
}
