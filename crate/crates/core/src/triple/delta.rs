use serde::{Deserialize, Serialize};

use super::{TaskEdge, TaskNode, UnderstandingGraph};
use crate::error::TripleError;
use crate::ids::TaskId;

/// Id-matched difference between two understanding graphs.
///
/// `relabelled` carries the full new node for every id present on both sides
/// whose label, detail or origin changed.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct GraphDelta {
    pub added_nodes: Vec<TaskNode>,
    pub removed_nodes: Vec<TaskId>,
    pub relabelled: Vec<TaskNode>,
    pub added_edges: Vec<TaskEdge>,
    pub removed_edges: Vec<TaskEdge>,
}

impl GraphDelta {
    pub fn is_empty(&self) -> bool {
        self.added_nodes.is_empty()
            && self.removed_nodes.is_empty()
            && self.relabelled.is_empty()
            && self.added_edges.is_empty()
            && self.removed_edges.is_empty()
    }

    /// Any node or edge added or removed.
    pub fn is_structural(&self) -> bool {
        !(self.added_nodes.is_empty()
            && self.removed_nodes.is_empty()
            && self.added_edges.is_empty()
            && self.removed_edges.is_empty())
    }

    /// Ids of nodes that were added or relabelled.
    pub fn touched_nodes(&self) -> impl Iterator<Item = &TaskId> {
        self.added_nodes
            .iter()
            .chain(self.relabelled.iter())
            .map(|n| &n.id)
    }

    pub fn apply(&self, before: &UnderstandingGraph) -> Result<UnderstandingGraph, TripleError> {
        let mut g = before.clone();
        for e in &self.removed_edges {
            g.remove_edge(e)?;
        }
        for id in &self.removed_nodes {
            g.remove_node(id)?;
        }
        for n in &self.added_nodes {
            g.insert_node(n.clone())?;
        }
        for n in &self.relabelled {
            g.update_node(n.clone())?;
        }
        for e in &self.added_edges {
            g.insert_edge(e.clone())?;
        }
        Ok(g)
    }
}

pub fn diff_graphs(before: &UnderstandingGraph, after: &UnderstandingGraph) -> GraphDelta {
    let mut delta = GraphDelta::default();
    for n in after.nodes() {
        match before.node(&n.id) {
            None => delta.added_nodes.push(n.clone()),
            Some(old) if old != n => delta.relabelled.push(n.clone()),
            Some(_) => {}
        }
    }
    delta.removed_nodes = before
        .ids()
        .filter(|id| !after.contains(id))
        .cloned()
        .collect();
    delta.added_edges = after
        .edges()
        .filter(|e| !before.contains_edge(e))
        .cloned()
        .collect();
    delta.removed_edges = before
        .edges()
        .filter(|e| !after.contains_edge(e))
        .cloned()
        .collect();
    delta
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::triple::EdgeKind;

    fn graph(nodes: &[(&str, &str)], edges: &[(&str, &str)]) -> UnderstandingGraph {
        UnderstandingGraph::from_parts(
            nodes.iter().map(|(id, l)| TaskNode::new(*id, *l)).collect(),
            edges
                .iter()
                .map(|(s, d)| TaskEdge::dependency(*s, *d))
                .collect(),
        )
        .unwrap()
    }

    #[test]
    fn identical_graphs_have_empty_delta() {
        let g = graph(&[("a", "A"), ("b", "B")], &[("a", "b")]);
        assert!(diff_graphs(&g, &g).is_empty());
    }

    #[test]
    fn added_node_and_edge() {
        let before = graph(&[("a", "A")], &[]);
        let after = graph(&[("a", "A"), ("b", "B")], &[("a", "b")]);
        let d = diff_graphs(&before, &after);
        assert_eq!(d.added_nodes, vec![TaskNode::new("b", "B")]);
        assert_eq!(d.added_edges, vec![TaskEdge::dependency("a", "b")]);
        assert!(d.removed_nodes.is_empty() && d.removed_edges.is_empty() && d.relabelled.is_empty());
        assert_eq!(d.apply(&before).unwrap(), after);
    }

    #[test]
    fn relabel_is_not_structural() {
        let before = graph(&[("a", "A")], &[]);
        let after = graph(&[("a", "renamed")], &[]);
        let d = diff_graphs(&before, &after);
        assert_eq!(d.relabelled, vec![TaskNode::new("a", "renamed")]);
        assert!(!d.is_structural());
        assert!(!d.is_empty());
    }

    #[test]
    fn removing_node_lists_incident_edges() {
        let before = graph(&[("a", "A"), ("b", "B"), ("c", "C")], &[("a", "b"), ("b", "c")]);
        let after = graph(&[("a", "A"), ("c", "C")], &[]);
        let d = diff_graphs(&before, &after);
        assert_eq!(d.removed_nodes, vec![TaskId::from("b")]);
        assert_eq!(d.removed_edges.len(), 2);
        assert_eq!(d.apply(&before).unwrap(), after);
    }

    #[test]
    fn edge_kind_change_is_remove_plus_add() {
        let before = graph(&[("a", "A"), ("b", "B")], &[("a", "b")]);
        let mut after = graph(&[("a", "A"), ("b", "B")], &[]);
        after
            .insert_edge(TaskEdge::new("a", "b", EdgeKind::DataFlow))
            .unwrap();
        let d = diff_graphs(&before, &after);
        assert_eq!(d.added_edges.len(), 1);
        assert_eq!(d.removed_edges.len(), 1);
        assert_eq!(d.apply(&before).unwrap(), after);
    }
}
