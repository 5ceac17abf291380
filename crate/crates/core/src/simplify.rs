//! Intent-aware graph simplification.
//!
//! Starting from the second layer of the intent tree, every subtree that holds
//! no focus intent has the task nodes it owns collapsed into one supernode
//! labelled with the subtree root's text. Subtrees that do hold focus are
//! opened up and their children tested the same way. Task nodes owned
//! directly by an opened intent (and by the tree root) stay expanded. Edges
//! are rebuilt through the collapse map, dropping self-loops and merging
//! parallel duplicates.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::error::SimplifyError;
use crate::ids::{IntentId, TaskId};
use crate::tracker::FocusSet;
use crate::triple::{EdgeKind, TaskEdge, TaskNode, Triple};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Supernode {
    pub id: TaskId,
    pub intent_id: IntentId,
    pub label: String,
    pub member_count: usize,
    pub member_ids: Vec<TaskId>,
}

/// A node of the simplified view. Supernodes are told apart on the wire by
/// their `member_ids` field.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ViewNode {
    Super(Supernode),
    Task(TaskNode),
}

impl ViewNode {
    pub fn id(&self) -> &TaskId {
        match self {
            ViewNode::Super(s) => &s.id,
            ViewNode::Task(t) => &t.id,
        }
    }

    pub fn label(&self) -> &str {
        match self {
            ViewNode::Super(s) => &s.label,
            ViewNode::Task(t) => &t.label,
        }
    }

    pub fn as_supernode(&self) -> Option<&Supernode> {
        match self {
            ViewNode::Super(s) => Some(s),
            ViewNode::Task(_) => None,
        }
    }
}

/// The total map φ from original task ids to view node ids.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct CollapseMap(BTreeMap<TaskId, TaskId>);

impl CollapseMap {
    pub fn image<'a>(&'a self, id: &'a TaskId) -> &'a TaskId {
        self.0.get(id).unwrap_or(id)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&TaskId, &TaskId)> {
        self.0.iter()
    }

    pub fn is_identity_on(&self, id: &TaskId) -> bool {
        self.image(id) == id
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SimplifiedView {
    pub nodes: Vec<ViewNode>,
    pub edges: Vec<TaskEdge>,
    pub highlight: BTreeSet<TaskId>,
    pub collapse: CollapseMap,
}

impl SimplifiedView {
    pub fn node(&self, id: &TaskId) -> Option<&ViewNode> {
        self.nodes.iter().find(|n| n.id() == id)
    }

    pub fn supernodes(&self) -> impl Iterator<Item = &Supernode> {
        self.nodes.iter().filter_map(ViewNode::as_supernode)
    }

    pub fn node_ids(&self) -> BTreeSet<&TaskId> {
        self.nodes.iter().map(ViewNode::id).collect()
    }

    /// Updates the label of a retained task node in place. Supernode labels
    /// come from intents and are left alone.
    pub fn relabel(&mut self, node: &TaskNode) -> bool {
        for n in &mut self.nodes {
            if let ViewNode::Task(t) = n {
                if t.id == node.id {
                    *t = node.clone();
                    return true;
                }
            }
        }
        false
    }
}

pub fn simplify(triple: &Triple, focus: &FocusSet) -> Result<SimplifiedView, SimplifyError> {
    let tree = triple.intent_tree();
    if let Some(bad) = focus.iter().find(|id| !tree.contains(id)) {
        return Err(SimplifyError::InvalidFocus(bad.clone()));
    }

    // holds_focus[v] <=> F ∩ T(v) ≠ ∅, filled children-first.
    let order = tree.preorder();
    let mut holds_focus: BTreeMap<&IntentId, bool> = BTreeMap::new();
    for id in order.iter().rev() {
        let below = tree.children(id).iter().any(|c| holds_focus[c]);
        holds_focus.insert(id, below || focus.contains(id));
    }

    let mut owned: BTreeMap<&IntentId, Vec<&TaskId>> = BTreeMap::new();
    for t in triple.graph().ids() {
        owned.entry(triple.owner_of(t)).or_default().push(t);
    }

    let mut groups: Vec<(&IntentId, Vec<TaskId>)> = Vec::new();
    let mut pending: Vec<&IntentId> = tree.children(tree.root()).iter().rev().collect();
    while let Some(v) = pending.pop() {
        if holds_focus[v] {
            pending.extend(tree.children(v).iter().rev());
            continue;
        }
        let mut members: Vec<TaskId> = tree
            .subtree(v)
            .into_iter()
            .flat_map(|u| owned.get(u).into_iter().flatten())
            .map(|t| (*t).clone())
            .collect();
        if !members.is_empty() {
            members.sort();
            groups.push((v, members));
        }
    }

    let mut collapse = BTreeMap::new();
    let mut supernodes = Vec::with_capacity(groups.len());
    for (intent, members) in groups {
        let id = supernode_id(intent, |c| triple.graph().contains(c));
        for m in &members {
            collapse.insert(m.clone(), id.clone());
        }
        supernodes.push(Supernode {
            id,
            intent_id: intent.clone(),
            label: tree.get(intent).expect("intent from tree").text.clone(),
            member_count: members.len(),
            member_ids: members,
        });
    }
    for t in triple.graph().ids() {
        collapse.entry(t.clone()).or_insert_with(|| t.clone());
    }
    let collapse = CollapseMap(collapse);

    let mut nodes: Vec<ViewNode> = triple
        .graph()
        .nodes()
        .filter(|n| collapse.is_identity_on(&n.id))
        .cloned()
        .map(ViewNode::Task)
        .chain(supernodes.into_iter().map(ViewNode::Super))
        .collect();
    nodes.sort_by(|a, b| a.id().cmp(b.id()));

    let mut grouped: BTreeMap<(&TaskId, &TaskId), BTreeSet<EdgeKind>> = BTreeMap::new();
    for e in triple.graph().edges() {
        let (s, t) = (collapse.image(&e.src), collapse.image(&e.dst));
        if s != t {
            grouped.entry((s, t)).or_default().insert(e.kind);
        }
    }
    let mut edges = Vec::new();
    for ((s, t), kinds) in grouped {
        // Supernode ids never coincide with task ids.
        let touches_super = !triple.graph().contains(s) || !triple.graph().contains(t);
        if touches_super {
            let kind = if kinds.len() == 1 && kinds.contains(&EdgeKind::DataFlow) {
                EdgeKind::DataFlow
            } else {
                EdgeKind::Dependency
            };
            edges.push(TaskEdge::new(s.clone(), t.clone(), kind));
        } else {
            edges.extend(kinds.into_iter().map(|k| TaskEdge::new(s.clone(), t.clone(), k)));
        }
    }

    let highlight = triple
        .graph()
        .ids()
        .filter(|t| collapse.is_identity_on(t) && focus.contains(triple.owner_of(t)))
        .cloned()
        .collect();

    Ok(SimplifiedView {
        nodes,
        edges,
        highlight,
        collapse,
    })
}

/// Member ids of a supernode, for highlighting its region in the full graph.
pub fn expand_supernode(
    view: &SimplifiedView,
    supernode_id: &TaskId,
) -> Result<BTreeSet<TaskId>, SimplifyError> {
    view.supernodes()
        .find(|s| &s.id == supernode_id)
        .map(|s| s.member_ids.iter().cloned().collect())
        .ok_or_else(|| SimplifyError::NotASupernode(supernode_id.to_string()))
}

/// `u:<intent>`, primed until it clashes with no task id.
fn supernode_id(intent: &IntentId, taken: impl Fn(&TaskId) -> bool) -> TaskId {
    let mut id = format!("u:{intent}");
    while taken(&TaskId::new(id.as_str())) {
        id.push('\'');
    }
    TaskId::new(id)
}
