//! The triple: intent tree, understanding graph and the mapping between them.
//!
//! A [`Triple`] is only ever constructed through validation, so holding one
//! means every cross-reference resolves, the intent tree is a proper rooted
//! tree, and each mapped task node has exactly one owning intent.

mod delta;
mod doc;

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::error::TripleError;
use crate::ids::{IntentId, TaskId};

pub use delta::{diff_graphs, GraphDelta};
pub use doc::{GraphDoc, IntentTreeDoc, MappingEntry, TripleDoc};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum IntentState {
    Completed,
    #[default]
    NotCompleted,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct IntentNode {
    pub id: IntentId,
    pub text: String,
    #[serde(default)]
    pub state: IntentState,
    #[serde(default)]
    pub children: Vec<IntentId>,
}

impl IntentNode {
    pub fn new(id: impl Into<IntentId>, text: impl Into<String>) -> Self {
        Self {
            id: id.into(),
            text: text.into(),
            state: IntentState::NotCompleted,
            children: Vec::new(),
        }
    }

    pub fn with_children<I, S>(mut self, children: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<IntentId>,
    {
        self.children = children.into_iter().map(Into::into).collect();
        self
    }

    pub fn with_state(mut self, state: IntentState) -> Self {
        self.state = state;
        self
    }
}

/// Hierarchical decomposition of the user's goal.
///
/// `version` is the dialogue round the tree belongs to.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct IntentTree {
    pub(crate) root: IntentId,
    pub(crate) nodes: BTreeMap<IntentId, IntentNode>,
    pub(crate) version: u64,
}

impl IntentTree {
    /// Builds and validates a tree from a flat node list.
    pub fn from_nodes(
        root: impl Into<IntentId>,
        nodes: Vec<IntentNode>,
        version: u64,
    ) -> Result<Self, TripleError> {
        IntentTreeDoc {
            root: root.into(),
            version,
            nodes,
        }
        .validate()
    }

    pub fn root(&self) -> &IntentId {
        &self.root
    }

    pub fn version(&self) -> u64 {
        self.version
    }

    pub fn with_version(mut self, version: u64) -> Self {
        self.version = version;
        self
    }

    /// Sets the state of one node; false if the id is unknown.
    pub fn set_state(&mut self, id: &IntentId, state: IntentState) -> bool {
        match self.nodes.get_mut(id) {
            Some(n) => {
                n.state = state;
                true
            }
            None => false,
        }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn get(&self, id: &IntentId) -> Option<&IntentNode> {
        self.nodes.get(id)
    }

    pub fn contains(&self, id: &IntentId) -> bool {
        self.nodes.contains_key(id)
    }

    pub fn ids(&self) -> impl Iterator<Item = &IntentId> {
        self.nodes.keys()
    }

    pub fn nodes(&self) -> impl Iterator<Item = &IntentNode> {
        self.nodes.values()
    }

    pub fn children(&self, id: &IntentId) -> &[IntentId] {
        self.nodes
            .get(id)
            .map(|n| n.children.as_slice())
            .unwrap_or(&[])
    }

    /// Root-first, child-order traversal of the whole tree.
    pub fn preorder(&self) -> Vec<&IntentId> {
        self.subtree(&self.root)
    }

    /// Preorder traversal of the subtree rooted at `id` (empty if unknown).
    pub fn subtree(&self, id: &IntentId) -> Vec<&IntentId> {
        let mut out = Vec::new();
        let Some((start, _)) = self.nodes.get_key_value(id) else {
            return out;
        };
        let mut stack = vec![start];
        while let Some(cur) = stack.pop() {
            out.push(cur);
            for child in self.children(cur).iter().rev() {
                stack.push(child);
            }
        }
        out
    }

    pub fn parent_of(&self, id: &IntentId) -> Option<&IntentId> {
        self.nodes
            .values()
            .find(|n| n.children.contains(id))
            .map(|n| &n.id)
    }

    /// True if `ancestor` lies on the path from the root to `id` (inclusive).
    pub fn is_ancestor_or_self(&self, ancestor: &IntentId, id: &IntentId) -> bool {
        let mut cur = Some(id);
        while let Some(c) = cur {
            if c == ancestor {
                return true;
            }
            cur = self.parent_of(c);
        }
        false
    }

    /// Leaves in preorder.
    pub fn leaves(&self) -> Vec<&IntentId> {
        self.preorder()
            .into_iter()
            .filter(|id| self.children(id).is_empty())
            .collect()
    }

    pub fn all_completed(&self) -> bool {
        self.nodes
            .values()
            .all(|n| n.state == IntentState::Completed)
    }

    /// Same topology (ids and child order) as `other`, texts and states ignored.
    pub fn same_topology(&self, other: &IntentTree) -> bool {
        self.root == other.root
            && self.nodes.len() == other.nodes.len()
            && self.nodes.iter().all(|(id, n)| {
                other
                    .nodes
                    .get(id)
                    .is_some_and(|o| o.children == n.children)
            })
    }

    pub fn to_doc(&self) -> IntentTreeDoc {
        IntentTreeDoc {
            root: self.root.clone(),
            version: self.version,
            nodes: self
                .preorder()
                .into_iter()
                .map(|id| self.nodes[id].clone())
                .collect(),
        }
    }
}

impl Serialize for IntentTree {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        self.to_doc().serialize(s)
    }
}

impl<'de> Deserialize<'de> for IntentTree {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        IntentTreeDoc::deserialize(d)?
            .validate()
            .map_err(serde::de::Error::custom)
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum TaskOrigin {
    #[default]
    Extracted,
    UserAdded,
    NlModified,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TaskNode {
    pub id: TaskId,
    pub label: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub detail: Option<String>,
    #[serde(default)]
    pub origin: TaskOrigin,
}

impl TaskNode {
    pub fn new(id: impl Into<TaskId>, label: impl Into<String>) -> Self {
        Self {
            id: id.into(),
            label: label.into(),
            detail: None,
            origin: TaskOrigin::Extracted,
        }
    }

    pub fn with_origin(mut self, origin: TaskOrigin) -> Self {
        self.origin = origin;
        self
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum EdgeKind {
    #[default]
    Dependency,
    DataFlow,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct TaskEdge {
    pub src: TaskId,
    pub dst: TaskId,
    #[serde(default)]
    pub kind: EdgeKind,
}

impl TaskEdge {
    pub fn new(src: impl Into<TaskId>, dst: impl Into<TaskId>, kind: EdgeKind) -> Self {
        Self {
            src: src.into(),
            dst: dst.into(),
            kind,
        }
    }

    pub fn dependency(src: impl Into<TaskId>, dst: impl Into<TaskId>) -> Self {
        Self::new(src, dst, EdgeKind::Dependency)
    }
}

/// Directed task graph. Cycles are permitted and reported by [`has_cycle`].
///
/// [`has_cycle`]: UnderstandingGraph::has_cycle
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct UnderstandingGraph {
    nodes: BTreeMap<TaskId, TaskNode>,
    edges: BTreeSet<TaskEdge>,
}

impl UnderstandingGraph {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_parts(nodes: Vec<TaskNode>, edges: Vec<TaskEdge>) -> Result<Self, TripleError> {
        GraphDoc {
            nodes,
            edges,
            has_cycle: false,
        }
        .validate()
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn node(&self, id: &TaskId) -> Option<&TaskNode> {
        self.nodes.get(id)
    }

    pub fn contains(&self, id: &TaskId) -> bool {
        self.nodes.contains_key(id)
    }

    pub fn nodes(&self) -> impl Iterator<Item = &TaskNode> {
        self.nodes.values()
    }

    pub fn ids(&self) -> impl Iterator<Item = &TaskId> {
        self.nodes.keys()
    }

    pub fn edges(&self) -> impl Iterator<Item = &TaskEdge> {
        self.edges.iter()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn contains_edge(&self, edge: &TaskEdge) -> bool {
        self.edges.contains(edge)
    }

    pub fn successors<'a>(&'a self, id: &'a TaskId) -> impl Iterator<Item = &'a TaskId> + 'a {
        self.edges.iter().filter(move |e| &e.src == id).map(|e| &e.dst)
    }

    pub fn insert_node(&mut self, node: TaskNode) -> Result<(), TripleError> {
        if node.label.trim().is_empty() {
            return Err(TripleError::InvalidField {
                what: format!("task node {} has an empty label", node.id),
            });
        }
        if self.nodes.contains_key(&node.id) {
            return Err(TripleError::DuplicateId {
                id: node.id.to_string(),
            });
        }
        self.nodes.insert(node.id.clone(), node);
        Ok(())
    }

    /// Replaces label/detail/origin of an existing node.
    pub fn update_node(&mut self, node: TaskNode) -> Result<(), TripleError> {
        if node.label.trim().is_empty() {
            return Err(TripleError::InvalidField {
                what: format!("task node {} has an empty label", node.id),
            });
        }
        match self.nodes.get_mut(&node.id) {
            Some(slot) => {
                *slot = node;
                Ok(())
            }
            None => Err(TripleError::DanglingReference {
                what: "task node".into(),
                id: node.id.to_string(),
            }),
        }
    }

    /// Removes a node together with every incident edge.
    pub fn remove_node(&mut self, id: &TaskId) -> Result<TaskNode, TripleError> {
        let node = self
            .nodes
            .remove(id)
            .ok_or_else(|| TripleError::DanglingReference {
                what: "task node".into(),
                id: id.to_string(),
            })?;
        self.edges.retain(|e| &e.src != id && &e.dst != id);
        Ok(node)
    }

    pub fn insert_edge(&mut self, edge: TaskEdge) -> Result<(), TripleError> {
        for end in [&edge.src, &edge.dst] {
            if !self.nodes.contains_key(end) {
                return Err(TripleError::DanglingReference {
                    what: "edge endpoint".into(),
                    id: end.to_string(),
                });
            }
        }
        if edge.src == edge.dst {
            return Err(TripleError::InvalidField {
                what: format!("self-loop on {}", edge.src),
            });
        }
        if self.edges.contains(&edge) {
            return Err(TripleError::DuplicateEdge {
                src: edge.src.to_string(),
                dst: edge.dst.to_string(),
            });
        }
        self.edges.insert(edge);
        Ok(())
    }

    pub fn remove_edge(&mut self, edge: &TaskEdge) -> Result<(), TripleError> {
        if self.edges.remove(edge) {
            Ok(())
        } else {
            Err(TripleError::DanglingReference {
                what: "edge".into(),
                id: format!("{}->{}", edge.src, edge.dst),
            })
        }
    }

    /// Whether the directed graph contains at least one cycle.
    pub fn has_cycle(&self) -> bool {
        // Kahn: any node left with positive in-degree sits on or behind a cycle.
        let mut indegree: BTreeMap<&TaskId, usize> = self.nodes.keys().map(|k| (k, 0)).collect();
        for e in &self.edges {
            *indegree.get_mut(&e.dst).expect("validated endpoint") += 1;
        }
        let mut ready: Vec<&TaskId> = indegree
            .iter()
            .filter(|(_, d)| **d == 0)
            .map(|(k, _)| *k)
            .collect();
        let mut seen = 0;
        while let Some(n) = ready.pop() {
            seen += 1;
            for succ in self.successors(n) {
                let d = indegree.get_mut(succ).expect("validated endpoint");
                *d -= 1;
                if *d == 0 {
                    ready.push(succ);
                }
            }
        }
        seen != self.nodes.len()
    }

    pub fn to_doc(&self) -> GraphDoc {
        GraphDoc {
            nodes: self.nodes.values().cloned().collect(),
            edges: self.edges.iter().cloned().collect(),
            has_cycle: self.has_cycle(),
        }
    }

    pub(crate) fn from_validated(
        nodes: BTreeMap<TaskId, TaskNode>,
        edges: BTreeSet<TaskEdge>,
    ) -> Self {
        Self { nodes, edges }
    }
}

impl Serialize for UnderstandingGraph {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        self.to_doc().serialize(s)
    }
}

impl<'de> Deserialize<'de> for UnderstandingGraph {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        GraphDoc::deserialize(d)?
            .validate()
            .map_err(serde::de::Error::custom)
    }
}

/// Intent → task-node claims plus the resolved single owner of every claimed
/// task node.
///
/// A task node claimed by several intents is owned by the claimant that comes
/// first in preorder; the remaining claims stay visible through
/// [`Mapping::referenced_by`].
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Mapping {
    claims: BTreeMap<IntentId, BTreeSet<TaskId>>,
    owners: BTreeMap<TaskId, IntentId>,
}

impl Mapping {
    pub fn claims(&self) -> impl Iterator<Item = (&IntentId, &BTreeSet<TaskId>)> {
        self.claims.iter()
    }

    pub fn claimed_by(&self, intent: &IntentId) -> Option<&BTreeSet<TaskId>> {
        self.claims.get(intent)
    }

    /// Explicit owner; `None` for unmapped task nodes.
    pub fn owner(&self, task: &TaskId) -> Option<&IntentId> {
        self.owners.get(task)
    }

    /// Intents that claim `task` without owning it.
    pub fn referenced_by(&self, task: &TaskId) -> Vec<&IntentId> {
        let owner = self.owners.get(task);
        self.claims
            .iter()
            .filter(|(intent, set)| set.contains(task) && Some(*intent) != owner)
            .map(|(intent, _)| intent)
            .collect()
    }

    pub fn entries(&self) -> Vec<MappingEntry> {
        self.claims
            .iter()
            .map(|(intent_id, ids)| MappingEntry {
                intent_id: intent_id.clone(),
                task_node_ids: ids.iter().cloned().collect(),
            })
            .collect()
    }

    /// Resolves ownership against `tree` and checks every reference.
    pub fn resolve<I>(
        claims: I,
        tree: &IntentTree,
        graph: &UnderstandingGraph,
    ) -> Result<Self, TripleError>
    where
        I: IntoIterator<Item = (IntentId, BTreeSet<TaskId>)>,
    {
        let mut merged: BTreeMap<IntentId, BTreeSet<TaskId>> = BTreeMap::new();
        for (intent, ids) in claims {
            if !tree.contains(&intent) {
                return Err(TripleError::DanglingReference {
                    what: "mapping intent".into(),
                    id: intent.to_string(),
                });
            }
            if let Some(bad) = ids.iter().find(|t| !graph.contains(t)) {
                return Err(TripleError::DanglingReference {
                    what: "mapping task node".into(),
                    id: bad.to_string(),
                });
            }
            merged.entry(intent).or_default().extend(ids);
        }
        merged.retain(|_, ids| !ids.is_empty());

        let mut owners = BTreeMap::new();
        for intent in tree.preorder() {
            if let Some(ids) = merged.get(intent) {
                for t in ids {
                    owners.entry(t.clone()).or_insert_with(|| intent.clone());
                }
            }
        }
        Ok(Self {
            claims: merged,
            owners,
        })
    }
}

/// Unit of alignment state for one dialogue round.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Triple {
    intent_tree: IntentTree,
    graph: UnderstandingGraph,
    mapping: Mapping,
}

impl Triple {
    pub fn new<I>(
        intent_tree: IntentTree,
        graph: UnderstandingGraph,
        claims: I,
    ) -> Result<Self, TripleError>
    where
        I: IntoIterator<Item = (IntentId, BTreeSet<TaskId>)>,
    {
        let mapping = Mapping::resolve(claims, &intent_tree, &graph)?;
        Ok(Self {
            intent_tree,
            graph,
            mapping,
        })
    }

    /// Parses and validates a canonical document.
    pub fn from_json(text: &str) -> Result<Self, TripleError> {
        let doc: TripleDoc =
            serde_json::from_str(text).map_err(|e| TripleError::Malformed(e.to_string()))?;
        doc.validate()
    }

    pub fn from_value(value: serde_json::Value) -> Result<Self, TripleError> {
        let doc: TripleDoc =
            serde_json::from_value(value).map_err(|e| TripleError::Malformed(e.to_string()))?;
        doc.validate()
    }

    /// Canonical serialized form. Re-parsing it yields an equal triple.
    pub fn to_canonical_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_doc()).expect("triple documents always serialize")
    }

    pub fn to_doc(&self) -> TripleDoc {
        TripleDoc {
            intent_tree: self.intent_tree.to_doc(),
            graph: self.graph.to_doc(),
            mapping: self.mapping.entries(),
            round: self.round(),
        }
    }

    pub fn intent_tree(&self) -> &IntentTree {
        &self.intent_tree
    }

    pub fn graph(&self) -> &UnderstandingGraph {
        &self.graph
    }

    pub fn mapping(&self) -> &Mapping {
        &self.mapping
    }

    pub fn round(&self) -> u64 {
        self.intent_tree.version
    }

    /// Owning intent of a task node; unmapped nodes belong to the root.
    pub fn owner_of(&self, task: &TaskId) -> &IntentId {
        self.mapping.owner(task).unwrap_or(&self.intent_tree.root)
    }

    /// Task nodes owned by `intent`, counting unmapped nodes as root-owned.
    pub fn owned_by(&self, intent: &IntentId) -> BTreeSet<TaskId> {
        self.graph
            .ids()
            .filter(|t| self.owner_of(t) == intent)
            .cloned()
            .collect()
    }

    /// Replaces the graph, dropping claims on nodes that no longer exist.
    pub fn with_graph(&self, graph: UnderstandingGraph) -> Self {
        let claims: Vec<(IntentId, BTreeSet<TaskId>)> = self
            .mapping
            .claims
            .iter()
            .map(|(i, ids)| {
                (
                    i.clone(),
                    ids.iter().filter(|t| graph.contains(t)).cloned().collect(),
                )
            })
            .collect();
        Self::new(self.intent_tree.clone(), graph, claims)
            .expect("claims were filtered against the new graph")
    }

    /// Replaces the graph and adds `extra` claims.
    pub fn with_graph_and_claims(
        &self,
        graph: UnderstandingGraph,
        extra: impl IntoIterator<Item = (IntentId, TaskId)>,
    ) -> Result<Self, TripleError> {
        let mut claims: BTreeMap<IntentId, BTreeSet<TaskId>> = self
            .mapping
            .claims
            .iter()
            .map(|(i, ids)| {
                (
                    i.clone(),
                    ids.iter().filter(|t| graph.contains(t)).cloned().collect(),
                )
            })
            .collect();
        for (intent, task) in extra {
            claims.entry(intent).or_default().insert(task);
        }
        Self::new(self.intent_tree.clone(), graph, claims)
    }

    /// Swaps in another intent tree; claims by intents missing from it are dropped.
    pub fn with_intent_tree(&self, tree: IntentTree) -> Self {
        let claims: Vec<_> = self
            .mapping
            .claims
            .iter()
            .filter(|(i, _)| tree.contains(i))
            .map(|(i, ids)| (i.clone(), ids.clone()))
            .collect();
        Self::new(tree, self.graph.clone(), claims).expect("claims were filtered against the tree")
    }

    /// Re-targets claims through `redirect` (absorbed intent → surviving intent).
    pub fn with_tree_and_redirects(
        &self,
        tree: IntentTree,
        redirect: &BTreeMap<IntentId, IntentId>,
    ) -> Self {
        let mut claims: BTreeMap<IntentId, BTreeSet<TaskId>> = BTreeMap::new();
        for (intent, ids) in &self.mapping.claims {
            let mut target = intent;
            while let Some(next) = redirect.get(target) {
                target = next;
            }
            if tree.contains(target) {
                claims
                    .entry(target.clone())
                    .or_default()
                    .extend(ids.iter().cloned());
            }
        }
        Self::new(tree, self.graph.clone(), claims).expect("claims were filtered against the tree")
    }
}

impl Serialize for Triple {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        self.to_doc().serialize(s)
    }
}

impl<'de> Deserialize<'de> for Triple {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        TripleDoc::deserialize(d)?
            .validate()
            .map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    fn minimal() -> serde_json::Value {
        json!({
            "intent_tree": {"root": "i0", "version": 0, "nodes": [{"id": "i0", "text": "goal"}]},
            "graph": {"nodes": [{"id": "g1", "label": "do it"}], "edges": []},
            "mapping": [{"intent_id": "i0", "task_node_ids": ["g1"]}],
            "round": 0
        })
    }

    #[test]
    fn minimal_document_validates() {
        let t = Triple::from_value(minimal()).unwrap();
        assert_eq!(t.round(), 0);
        assert_eq!(t.owner_of(&"g1".into()), &IntentId::from("i0"));
        let again = Triple::from_json(&t.to_canonical_json()).unwrap();
        assert_eq!(again, t);
    }

    #[test]
    fn dangling_mapping_id() {
        let mut d = minimal();
        d["mapping"][0]["task_node_ids"] = json!(["g9"]);
        assert!(matches!(
            Triple::from_value(d),
            Err(TripleError::DanglingReference { id, .. }) if id == "g9"
        ));
    }

    #[test]
    fn child_with_two_parents() {
        let mut d = minimal();
        d["intent_tree"]["nodes"] = json!([
            {"id": "i0", "text": "goal", "children": ["a", "b"]},
            {"id": "a", "text": "a", "children": ["c"]},
            {"id": "b", "text": "b", "children": ["c"]},
            {"id": "c", "text": "c"}
        ]);
        assert_eq!(
            Triple::from_value(d),
            Err(TripleError::DuplicateParent { node: "c".into() })
        );
    }

    #[test]
    fn parent_cycle_detected() {
        let mut d = minimal();
        d["intent_tree"]["nodes"] = json!([
            {"id": "i0", "text": "goal"},
            {"id": "a", "text": "a", "children": ["b"]},
            {"id": "b", "text": "b", "children": ["a"]}
        ]);
        assert!(matches!(
            Triple::from_value(d),
            Err(TripleError::CycleInIntentTree { .. })
        ));
    }

    #[test]
    fn root_listed_as_child_is_a_cycle() {
        let mut d = minimal();
        d["intent_tree"]["nodes"] = json!([
            {"id": "i0", "text": "goal", "children": ["a"]},
            {"id": "a", "text": "a", "children": ["i0"]}
        ]);
        assert!(matches!(
            Triple::from_value(d),
            Err(TripleError::CycleInIntentTree { .. })
        ));
    }

    #[test]
    fn second_root_is_unreachable() {
        let mut d = minimal();
        d["intent_tree"]["nodes"] = json!([
            {"id": "i0", "text": "goal"},
            {"id": "z", "text": "stray"}
        ]);
        assert_eq!(
            Triple::from_value(d),
            Err(TripleError::Unreachable { node: "z".into() })
        );
    }

    #[test]
    fn duplicate_ids() {
        let mut d = minimal();
        d["graph"]["nodes"] = json!([{"id": "g1", "label": "x"}, {"id": "g1", "label": "y"}]);
        assert_eq!(
            Triple::from_value(d),
            Err(TripleError::DuplicateId { id: "g1".into() })
        );
    }

    #[test]
    fn edge_rules() {
        let mut d = minimal();
        d["graph"]["edges"] = json!([{"src": "g1", "dst": "g1"}]);
        assert!(matches!(
            Triple::from_value(d.clone()),
            Err(TripleError::InvalidField { .. })
        ));
        d["graph"]["nodes"] = json!([{"id": "g1", "label": "x"}, {"id": "g2", "label": "y"}]);
        d["graph"]["edges"] = json!([{"src": "g1", "dst": "g2"}, {"src": "g1", "dst": "g2", "kind": "DEPENDENCY"}]);
        assert!(matches!(
            Triple::from_value(d),
            Err(TripleError::DuplicateEdge { .. })
        ));
    }

    #[test]
    fn malformed_and_round_mismatch() {
        assert!(matches!(Triple::from_json("{"), Err(TripleError::Malformed(_))));
        let mut d = minimal();
        d["round"] = json!(3);
        assert_eq!(
            Triple::from_value(d),
            Err(TripleError::RoundMismatch { round: 3, version: 0 })
        );
    }

    #[test]
    fn overlapping_claims_resolve_to_first_in_preorder() {
        let d = json!({
            "intent_tree": {"root": "r", "version": 2, "nodes": [
                {"id": "r", "text": "root", "children": ["b", "a"]},
                {"id": "a", "text": "a"},
                {"id": "b", "text": "b"}
            ]},
            "graph": {"nodes": [{"id": "g", "label": "shared"}, {"id": "h", "label": "free"}]},
            "mapping": [
                {"intent_id": "a", "task_node_ids": ["g"]},
                {"intent_id": "b", "task_node_ids": ["g"]}
            ],
            "round": 2
        });
        let t = Triple::from_value(d).unwrap();
        // b precedes a among r's children.
        assert_eq!(t.owner_of(&"g".into()), &IntentId::from("b"));
        assert_eq!(t.mapping().referenced_by(&"g".into()), vec![&IntentId::from("a")]);
        // unmapped nodes fall back to the root
        assert_eq!(t.owner_of(&"h".into()), &IntentId::from("r"));
    }

    #[test]
    fn cycle_flag_is_exposed() {
        let g = UnderstandingGraph::from_parts(
            vec![TaskNode::new("a", "a"), TaskNode::new("b", "b")],
            vec![TaskEdge::dependency("a", "b"), TaskEdge::dependency("b", "a")],
        )
        .unwrap();
        assert!(g.has_cycle());
        let v = serde_json::to_value(&g).unwrap();
        assert_eq!(v["has_cycle"], json!(true));
    }
}
