//! Quotient view built straight from its definition.
//!
//! An intent `v` (not the root) is collapsed exactly when its subtree holds no
//! focus member while every proper ancestor below the root does. Membership in
//! a subtree is decided by walking parent links, never by traversal order.

use std::collections::{BTreeMap, BTreeSet};

use intentgraph_core::{EdgeKind, FocusSet, IntentId, SimplifiedView, TaskId, Triple, ViewNode};

#[derive(Debug, PartialEq, Eq)]
pub struct OracleView {
    /// id → (label, members if supernode)
    pub nodes: BTreeMap<String, (String, Option<BTreeSet<String>>)>,
    pub edges: BTreeSet<(String, String, EdgeKind)>,
    pub highlight: BTreeSet<String>,
    pub phi: BTreeMap<String, String>,
}

fn parents(triple: &Triple) -> BTreeMap<IntentId, IntentId> {
    let tree = triple.intent_tree();
    let mut out = BTreeMap::new();
    for n in tree.nodes() {
        for c in &n.children {
            out.insert(c.clone(), n.id.clone());
        }
    }
    out
}

fn ancestors(parent: &BTreeMap<IntentId, IntentId>, id: &IntentId) -> Vec<IntentId> {
    let mut out = Vec::new();
    let mut cur = parent.get(id);
    while let Some(p) = cur {
        out.push(p.clone());
        cur = parent.get(p);
    }
    out
}

fn in_subtree(parent: &BTreeMap<IntentId, IntentId>, top: &IntentId, x: &IntentId) -> bool {
    x == top || ancestors(parent, x).contains(top)
}

pub fn oracle_simplify(triple: &Triple, focus: &FocusSet) -> OracleView {
    let tree = triple.intent_tree();
    let parent = parents(triple);
    let root = tree.root();
    let ids: Vec<IntentId> = tree.ids().cloned().collect();
    let focus_free =
        |v: &IntentId| !ids.iter().any(|x| focus.contains(x) && in_subtree(&parent, v, x));

    let collapsed: Vec<&IntentId> = ids
        .iter()
        .filter(|v| *v != root)
        .filter(|v| focus_free(v))
        .filter(|v| {
            ancestors(&parent, v)
                .iter()
                .filter(|a| *a != root)
                .all(|a| !focus_free(a))
        })
        .collect();

    let mut phi: BTreeMap<String, String> = BTreeMap::new();
    let mut nodes = BTreeMap::new();
    for v in &collapsed {
        let members: BTreeSet<String> = triple
            .graph()
            .ids()
            .filter(|t| in_subtree(&parent, v, triple.owner_of(t)))
            .map(|t| t.to_string())
            .collect();
        if members.is_empty() {
            continue;
        }
        let sid = format!("u:{v}");
        for m in &members {
            phi.insert(m.clone(), sid.clone());
        }
        nodes.insert(
            sid,
            (tree.get(v).unwrap().text.clone(), Some(members)),
        );
    }
    for n in triple.graph().nodes() {
        let id = n.id.to_string();
        if !phi.contains_key(&id) {
            phi.insert(id.clone(), id.clone());
            nodes.insert(id, (n.label.clone(), None));
        }
    }

    let mut kinds: BTreeMap<(String, String), Vec<EdgeKind>> = BTreeMap::new();
    for e in triple.graph().edges() {
        let (s, t) = (phi[e.src.as_str()].clone(), phi[e.dst.as_str()].clone());
        if s != t {
            kinds.entry((s, t)).or_default().push(e.kind);
        }
    }
    let mut edges = BTreeSet::new();
    for ((s, t), ks) in kinds {
        let is_super = |x: &String| nodes[x].1.is_some();
        if is_super(&s) || is_super(&t) {
            let k = if ks.iter().all(|k| *k == EdgeKind::DataFlow) {
                EdgeKind::DataFlow
            } else {
                EdgeKind::Dependency
            };
            edges.insert((s, t, k));
        } else {
            for k in ks {
                edges.insert((s.clone(), t.clone(), k));
            }
        }
    }

    let highlight = triple
        .graph()
        .ids()
        .filter(|t| phi[t.as_str()] == t.as_str() && focus.contains(triple.owner_of(t)))
        .map(|t| t.to_string())
        .collect();

    OracleView {
        nodes,
        edges,
        highlight,
        phi,
    }
}

/// Projects an implementation view onto the oracle's representation.
pub fn project(view: &SimplifiedView, triple: &Triple) -> OracleView {
    let nodes = view
        .nodes
        .iter()
        .map(|n| match n {
            ViewNode::Super(s) => (
                s.id.to_string(),
                (
                    s.label.clone(),
                    Some(s.member_ids.iter().map(|m| m.to_string()).collect()),
                ),
            ),
            ViewNode::Task(t) => (t.id.to_string(), (t.label.clone(), None)),
        })
        .collect();
    let edges = view
        .edges
        .iter()
        .map(|e| (e.src.to_string(), e.dst.to_string(), e.kind))
        .collect();
    let highlight = view.highlight.iter().map(|t| t.to_string()).collect();
    let phi = triple
        .graph()
        .ids()
        .map(|t: &TaskId| (t.to_string(), view.collapse.image(t).to_string()))
        .collect();
    OracleView {
        nodes,
        edges,
        highlight,
        phi,
    }
}
