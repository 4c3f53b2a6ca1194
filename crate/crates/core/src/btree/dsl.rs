//! Indentation-based tree text, two spaces per level:
//!
//! ```text
//! reactive_sequence
//!   prior isHolding {loc=shelf}
//!   fallback
//!     condition isAt=table
//!     action moveTo(table)
//! ```

use std::collections::BTreeMap;
use std::fmt::Write as _;

use thiserror::Error;

use super::{Node, NodeKind, Tree};
use crate::domain::{Domain, DomainError, GroundAction, Predicate};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("line {line}: {message}")]
pub struct BuildError {
    /// 1-based line within the tree text.
    pub line: usize,
    pub message: String,
}

fn err(line: usize, message: impl Into<String>) -> BuildError {
    BuildError { line, message: message.into() }
}

pub fn parse_tree(text: &str, domain: &Domain) -> Result<Tree, BuildError> {
    let mut nodes: Vec<Node> = Vec::new();
    // open ancestors: (depth, node id)
    let mut stack: Vec<(usize, usize)> = Vec::new();
    let mut last_line = 0;
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let content = raw.trim_end();
        let body = content.trim_start();
        if body.is_empty() || body.starts_with('#') {
            continue;
        }
        last_line = line;
        let indent = content.len() - body.len();
        if content[..indent].contains('\t') || indent % 2 != 0 {
            return Err(err(line, "indent with two spaces per level"));
        }
        let depth = indent / 2;
        let kind = parse_node(body, domain).map_err(|m| err(line, m))?;

        while stack.last().is_some_and(|&(d, _)| d >= depth) {
            stack.pop();
        }
        match stack.last() {
            None if !nodes.is_empty() => return Err(err(line, "a tree has exactly one root")),
            None if depth != 0 => return Err(err(line, "the root must not be indented")),
            Some(&(d, _)) if d + 1 != depth => return Err(err(line, "indented more than one level")),
            Some(&(_, parent)) => {
                if !nodes[parent].kind.is_control() {
                    return Err(err(line, "only fallback and sequence nodes take children"));
                }
                let id = nodes.len();
                nodes[parent].children.push(id);
            }
            None => {}
        }
        stack.push((depth, nodes.len()));
        nodes.push(Node { kind, children: Vec::new() });
    }
    if nodes.is_empty() {
        return Err(err(1, "tree is empty"));
    }
    if let Some(empty) = nodes.iter().position(|n| n.kind.is_control() && n.children.is_empty()) {
        let line = node_line(text, empty).unwrap_or(last_line);
        return Err(err(line, "control node has no children"));
    }
    Tree::new(nodes).map_err(|m| err(last_line, m))
}

/// Line of the `index`-th node in `text`.
fn node_line(text: &str, index: usize) -> Option<usize> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| {
            let t = l.trim();
            !t.is_empty() && !t.starts_with('#')
        })
        .nth(index)
        .map(|(i, _)| i + 1)
}

fn parse_node(body: &str, domain: &Domain) -> Result<NodeKind, String> {
    let (keyword, rest) = body.split_once(char::is_whitespace).unwrap_or((body, ""));
    let rest = rest.trim();
    let no_args = |kind: NodeKind| {
        if rest.is_empty() {
            Ok(kind)
        } else {
            Err(format!("`{keyword}` takes no arguments"))
        }
    };
    match keyword {
        "fallback" => no_args(NodeKind::Fallback),
        "sequence" => no_args(NodeKind::Sequence),
        "reactive_sequence" => no_args(NodeKind::ReactiveSequence),
        "condition" => {
            if rest.is_empty() || rest.contains(char::is_whitespace) {
                return Err("`condition` takes exactly one predicate".into());
            }
            let pred = Predicate::parse(&domain.registry, rest).map_err(|e| e.to_string())?;
            Ok(NodeKind::Condition(pred))
        }
        "action" => parse_action(rest, domain).map(NodeKind::Action),
        "prior" => parse_prior(rest, domain),
        other => Err(format!("unknown node kind `{other}`")),
    }
}

fn parse_action(call: &str, domain: &Domain) -> Result<GroundAction, String> {
    if call.is_empty() {
        return Err("`action` needs an action name".into());
    }
    let (name, args) = match call.split_once('(') {
        Some((name, tail)) => {
            let inner = tail.strip_suffix(')').ok_or("missing `)` after action arguments")?;
            (name.trim(), inner)
        }
        None => (call, ""),
    };
    let id = domain.action_id(name).map_err(|e| e.to_string())?;
    let template = domain.template(id);
    let mut bindings = BTreeMap::new();
    let positional: Vec<&str> = args.split(',').map(str::trim).filter(|a| !a.is_empty()).collect();
    for (i, arg) in positional.iter().enumerate() {
        let (key, value) = match arg.split_once('=') {
            Some((k, v)) => (k.trim().to_string(), v.trim().to_string()),
            None => {
                let key = template
                    .params
                    .get(i)
                    .ok_or_else(|| format!("`{name}` takes {} arguments", template.params.len()))?;
                (key.clone(), arg.to_string())
            }
        };
        if !template.params.contains(&key) {
            return Err(format!("`{name}` has no parameter `{key}`"));
        }
        if bindings.insert(key.clone(), value).is_some() {
            return Err(format!("parameter `{key}` bound twice"));
        }
    }
    domain.ground(id, &bindings).map_err(|e| e.to_string())
}

fn parse_prior(rest: &str, domain: &Domain) -> Result<NodeKind, String> {
    let (preds, params) = match rest.split_once('{') {
        Some((p, tail)) => {
            let inner = tail.trim().strip_suffix('}').ok_or("missing `}` after prior parameters")?;
            (p, parse_params(inner)?)
        }
        None => (rest, BTreeMap::new()),
    };
    let mut targets: Vec<Predicate> = Vec::new();
    for text in preds.split_whitespace() {
        let pred = Predicate::parse(&domain.registry, text).map_err(|e| e.to_string())?;
        if targets.iter().any(|t| t.state == pred.state) {
            return Err(format!("prior sets `{}` twice", domain.registry.get(pred.state).id));
        }
        targets.push(pred);
    }
    if targets.is_empty() {
        return Err("`prior` needs at least one target".into());
    }
    if let Some(k) = params.keys().find(|k| !domain.actions.iter().any(|a| a.params.contains(k))) {
        return Err(format!("no action has a parameter `{k}`"));
    }
    // a binding must ground every action that uses it
    for i in 0..domain.actions.len() {
        match domain.ground(crate::inference::ActionId(i), &params) {
            Ok(_) | Err(DomainError::UnboundParameter { .. }) => {}
            Err(e) => return Err(e.to_string()),
        }
    }
    Ok(NodeKind::Prior { targets, params })
}

fn parse_params(inner: &str) -> Result<BTreeMap<String, String>, String> {
    let mut params = BTreeMap::new();
    for item in inner.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        let (k, v) = item.split_once('=').ok_or_else(|| format!("expected `key=value`, got `{item}`"))?;
        let (k, v) = (k.trim(), v.trim());
        if k.is_empty() || v.is_empty() {
            return Err(format!("expected `key=value`, got `{item}`"));
        }
        if params.insert(k.to_string(), v.to_string()).is_some() {
            return Err(format!("parameter `{k}` given twice"));
        }
    }
    Ok(params)
}

/// Canonical text of `tree`, accepted by [`parse_tree`].
pub fn write_tree(tree: &Tree, domain: &Domain) -> String {
    let mut out = String::new();
    write_node(tree, domain, 0, 0, &mut out);
    out
}

fn write_node(tree: &Tree, domain: &Domain, id: usize, depth: usize, out: &mut String) {
    let node = tree.node(id);
    let _ = writeln!(out, "{}{}", "  ".repeat(depth), node_text(&node.kind, domain));
    for &c in &node.children {
        write_node(tree, domain, c, depth + 1, out);
    }
}

pub(super) fn node_text(kind: &NodeKind, domain: &Domain) -> String {
    let reg = &domain.registry;
    match kind {
        NodeKind::Fallback => "fallback".into(),
        NodeKind::Sequence => "sequence".into(),
        NodeKind::ReactiveSequence => "reactive_sequence".into(),
        NodeKind::Condition(p) => format!("condition {}", p.display(reg)),
        NodeKind::Action(a) => format!("action {}", call_text(a, domain)),
        NodeKind::Prior { targets, params } => {
            let mut s = String::from("prior");
            for t in targets {
                let _ = write!(s, " {}", t.display(reg));
            }
            if !params.is_empty() {
                let _ = write!(s, " {}", params_text(params));
            }
            s
        }
    }
}

pub(super) fn params_text(params: &BTreeMap<String, String>) -> String {
    let items: Vec<String> = params.iter().map(|(k, v)| format!("{k}={v}")).collect();
    format!("{{{}}}", items.join(", "))
}

fn call_text(action: &GroundAction, domain: &Domain) -> String {
    let params = &domain.template(action.id).params;
    if params.iter().all(|p| action.args.contains_key(p)) {
        return action.to_string();
    }
    let named: Vec<String> = action.args.iter().map(|(k, v)| format!("{k}={v}")).collect();
    if named.is_empty() {
        action.name.clone()
    } else {
        format!("{}({})", action.name, named.join(", "))
    }
}
