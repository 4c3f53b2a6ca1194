use std::fmt::Write as _;

use super::dsl::params_text;
use super::{NodeKind, Tree};
use crate::domain::Domain;

fn escape(s: &str) -> String {
    s.replace('\\', "\\\\").replace('"', "\\\"")
}

/// Graphviz rendering. Node names are `n<id>` in pre-order, edges keep child order.
pub fn export_dot(tree: &Tree, domain: &Domain) -> String {
    let reg = &domain.registry;
    let mut out = String::from("digraph bt {\n  node [fontname=\"Helvetica\"];\n");
    for (id, node) in tree.nodes().iter().enumerate() {
        let (label, shape) = match &node.kind {
            NodeKind::Fallback => ("?".to_string(), "box"),
            NodeKind::Sequence => ("→".to_string(), "box"),
            NodeKind::ReactiveSequence => ("→R".to_string(), "box"),
            NodeKind::Condition(p) => (p.display(reg).to_string(), "ellipse"),
            NodeKind::Action(a) => (a.to_string(), "box"),
            NodeKind::Prior { targets, params } => {
                let mut l = targets.iter().map(|t| t.display(reg).to_string()).collect::<Vec<_>>().join(", ");
                if !params.is_empty() {
                    let _ = write!(l, "\\n{}", params_text(params));
                }
                (l, "hexagon")
            }
        };
        let style = if node.kind.is_control() { ", style=bold" } else { "" };
        let _ = writeln!(out, "  n{id} [label=\"{}\", shape={shape}{style}];", escape(&label).replace("\\\\n", "\\n"));
    }
    for (id, node) in tree.nodes().iter().enumerate() {
        for &c in &node.children {
            let _ = writeln!(out, "  n{id} -> n{c};");
        }
    }
    out.push_str("}\n");
    out
}
