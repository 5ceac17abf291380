//! Raw (unvalidated) document shapes and their validation into typed values.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::{IntentNode, IntentTree, TaskEdge, TaskNode, Triple, UnderstandingGraph};
use crate::error::TripleError;
use crate::ids::{IntentId, TaskId};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TripleDoc {
    pub intent_tree: IntentTreeDoc,
    pub graph: GraphDoc,
    #[serde(default)]
    pub mapping: Vec<MappingEntry>,
    pub round: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IntentTreeDoc {
    pub root: IntentId,
    #[serde(default)]
    pub version: u64,
    pub nodes: Vec<IntentNode>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct GraphDoc {
    pub nodes: Vec<TaskNode>,
    #[serde(default)]
    pub edges: Vec<TaskEdge>,
    /// Output-only; recomputed on every serialization.
    #[serde(default, skip_deserializing)]
    pub has_cycle: bool,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MappingEntry {
    pub intent_id: IntentId,
    pub task_node_ids: Vec<TaskId>,
}

impl TripleDoc {
    pub fn validate(self) -> Result<Triple, TripleError> {
        let tree = self.intent_tree.validate()?;
        if self.round != tree.version {
            return Err(TripleError::RoundMismatch {
                round: self.round,
                version: tree.version,
            });
        }
        let graph = self.graph.validate()?;
        let mut claims = Vec::with_capacity(self.mapping.len());
        for entry in self.mapping {
            if entry.task_node_ids.is_empty() {
                return Err(TripleError::InvalidField {
                    what: format!("mapping entry for {} has no task nodes", entry.intent_id),
                });
            }
            claims.push((
                entry.intent_id,
                entry.task_node_ids.into_iter().collect::<BTreeSet<_>>(),
            ));
        }
        Triple::new(tree, graph, claims)
    }
}

impl IntentTreeDoc {
    pub fn validate(self) -> Result<IntentTree, TripleError> {
        let mut nodes: BTreeMap<IntentId, IntentNode> = BTreeMap::new();
        for node in self.nodes {
            if node.text.trim().is_empty() {
                return Err(TripleError::InvalidField {
                    what: format!("intent {} has empty text", node.id),
                });
            }
            if nodes.contains_key(&node.id) {
                return Err(TripleError::DuplicateId {
                    id: node.id.to_string(),
                });
            }
            nodes.insert(node.id.clone(), node);
        }
        if !nodes.contains_key(&self.root) {
            return Err(TripleError::DanglingReference {
                what: "intent root".into(),
                id: self.root.to_string(),
            });
        }

        let mut parent: BTreeMap<&IntentId, &IntentId> = BTreeMap::new();
        for node in nodes.values() {
            let mut local = BTreeSet::new();
            for child in &node.children {
                if !nodes.contains_key(child) {
                    return Err(TripleError::DanglingReference {
                        what: format!("child of intent {}", node.id),
                        id: child.to_string(),
                    });
                }
                if !local.insert(child) || parent.insert(child, &node.id).is_some() {
                    return Err(TripleError::DuplicateParent {
                        node: child.to_string(),
                    });
                }
            }
        }
        if parent.contains_key(&self.root) {
            return Err(TripleError::CycleInIntentTree {
                node: self.root.to_string(),
            });
        }

        // Every node has at most one parent here, so anything unreachable from
        // the root is either a second root or sits on a parent cycle.
        let mut reached = BTreeSet::new();
        let mut stack = vec![&self.root];
        while let Some(cur) = stack.pop() {
            if reached.insert(cur) {
                stack.extend(nodes[cur].children.iter());
            }
        }
        if let Some(lost) = nodes.keys().find(|k| !reached.contains(k)) {
            return Err(if parent.contains_key(lost) {
                TripleError::CycleInIntentTree {
                    node: lost.to_string(),
                }
            } else {
                TripleError::Unreachable {
                    node: lost.to_string(),
                }
            });
        }

        Ok(IntentTree {
            root: self.root,
            nodes,
            version: self.version,
        })
    }
}

impl GraphDoc {
    pub fn validate(self) -> Result<UnderstandingGraph, TripleError> {
        let mut nodes = BTreeMap::new();
        for node in self.nodes {
            if node.label.trim().is_empty() {
                return Err(TripleError::InvalidField {
                    what: format!("task node {} has an empty label", node.id),
                });
            }
            if nodes.contains_key(&node.id) {
                return Err(TripleError::DuplicateId {
                    id: node.id.to_string(),
                });
            }
            nodes.insert(node.id.clone(), node);
        }
        let mut edges = BTreeSet::new();
        for edge in self.edges {
            for end in [&edge.src, &edge.dst] {
                if !nodes.contains_key(end) {
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
            let (src, dst) = (edge.src.to_string(), edge.dst.to_string());
            if !edges.insert(edge) {
                return Err(TripleError::DuplicateEdge { src, dst });
            }
        }
        Ok(UnderstandingGraph::from_validated(nodes, edges))
    }
}
