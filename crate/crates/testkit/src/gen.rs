use std::collections::{BTreeMap, BTreeSet};

use intentgraph_core::{
    EdgeKind, FocusSet, IntentId, IntentNode, IntentState, IntentTree, IntentUpdate, TaskEdge,
    TaskId, TaskNode, Triple, UnderstandingGraph, UpdateOp,
};
use rand::seq::SliceRandom;
use rand::Rng;

pub fn intent_id(i: usize) -> IntentId {
    IntentId::new(format!("i{i}"))
}

pub fn task_id(i: usize) -> TaskId {
    TaskId::new(format!("g{i}"))
}

/// Tree from a parent array: `parents[k]` is the parent of node `k + 1`
/// and must be `<= k`. Node 0 is the root.
pub fn tree_from_parents(parents: &[usize], version: u64) -> IntentTree {
    let n = parents.len() + 1;
    let mut nodes: Vec<IntentNode> = (0..n)
        .map(|i| IntentNode::new(intent_id(i), format!("intent {i}")))
        .collect();
    for (k, &p) in parents.iter().enumerate() {
        assert!(p <= k, "parent array must point backwards");
        nodes[p].children.push(intent_id(k + 1));
    }
    IntentTree::from_nodes(intent_id(0), nodes, version).expect("parent arrays describe trees")
}

/// Every parent array for trees with `n` nodes.
pub fn all_parent_arrays(n: usize) -> Vec<Vec<usize>> {
    let mut out = vec![Vec::new()];
    for k in 0..n.saturating_sub(1) {
        out = out
            .into_iter()
            .flat_map(|prefix| {
                (0..=k).map(move |p| {
                    let mut v = prefix.clone();
                    v.push(p);
                    v
                })
            })
            .collect();
    }
    out
}

pub fn random_tree<R: Rng>(rng: &mut R, n: usize) -> IntentTree {
    let parents: Vec<usize> = (0..n.saturating_sub(1)).map(|k| rng.gen_range(0..=k)).collect();
    tree_from_parents(&parents, 0)
}

pub fn random_graph<R: Rng>(rng: &mut R, m: usize, edge_prob: f64) -> UnderstandingGraph {
    let nodes = (0..m)
        .map(|i| TaskNode::new(task_id(i), format!("task {i}")))
        .collect();
    let mut edges = Vec::new();
    for s in 0..m {
        for t in 0..m {
            if s == t {
                continue;
            }
            for kind in [EdgeKind::Dependency, EdgeKind::DataFlow] {
                if rng.gen_bool(edge_prob / 2.0) {
                    edges.push(TaskEdge::new(task_id(s), task_id(t), kind));
                }
            }
        }
    }
    UnderstandingGraph::from_parts(nodes, edges).expect("generated graph is valid")
}

/// Random claims: most task nodes get one claimant, some none, some several.
pub fn random_claims<R: Rng>(
    rng: &mut R,
    tree: &IntentTree,
    graph: &UnderstandingGraph,
) -> Vec<(IntentId, BTreeSet<TaskId>)> {
    let intents: Vec<&IntentId> = tree.ids().collect();
    let mut claims: BTreeMap<IntentId, BTreeSet<TaskId>> = BTreeMap::new();
    for t in graph.ids() {
        let k = match rng.gen_range(0..10) {
            0 => 0,
            1 => 2,
            _ => 1,
        };
        for _ in 0..k {
            let owner = intents.choose(rng).expect("non-empty tree");
            claims.entry((*owner).clone()).or_default().insert(t.clone());
        }
    }
    claims.into_iter().collect()
}

pub fn random_triple<R: Rng>(rng: &mut R, intents: usize, tasks: usize) -> Triple {
    let tree = random_tree(rng, intents);
    let graph = random_graph(rng, tasks, 0.3);
    let claims = random_claims(rng, &tree, &graph);
    Triple::new(tree, graph, claims).expect("generated triple is valid")
}

pub fn random_focus<R: Rng>(rng: &mut R, tree: &IntentTree) -> FocusSet {
    let p = rng.gen_range(0.0..0.6);
    tree.ids().filter(|_| rng.gen_bool(p)).cloned().collect()
}

/// All subsets of the tree's ids.
pub fn all_focus_sets(tree: &IntentTree) -> Vec<FocusSet> {
    let ids: Vec<&IntentId> = tree.ids().collect();
    (0u32..(1 << ids.len()))
        .map(|mask| {
            ids.iter()
                .enumerate()
                .filter(|(i, _)| mask & (1 << i) != 0)
                .map(|(_, id)| (*id).clone())
                .collect()
        })
        .collect()
}

/// An update that is valid against `tree` as it stands.
pub fn random_valid_update<R: Rng>(rng: &mut R, tree: &IntentTree, salt: usize) -> IntentUpdate {
    let ids: Vec<&IntentId> = tree.ids().collect();
    let pick = |rng: &mut R| (*ids.choose(rng).expect("non-empty")).clone();
    let non_root: Vec<&IntentId> = ids.iter().copied().filter(|i| *i != tree.root()).collect();
    for _ in 0..16 {
        let op = match rng.gen_range(0..6) {
            0 => UpdateOp::Noop,
            1 => UpdateOp::Refine {
                id: pick(rng),
                new_text: format!("refined {salt}"),
            },
            2 => UpdateOp::Add {
                parent_id: pick(rng),
                text: format!("added {salt}"),
                id: None,
            },
            3 => UpdateOp::MarkState {
                id: pick(rng),
                state: if rng.gen_bool(0.5) {
                    IntentState::Completed
                } else {
                    IntentState::NotCompleted
                },
            },
            4 => {
                let Some(id) = non_root.choose(rng) else { continue };
                let target = pick(rng);
                if tree.is_ancestor_or_self(id, &target) {
                    continue;
                }
                UpdateOp::Reparent {
                    id: (*id).clone(),
                    new_parent_id: target,
                }
            }
            _ => {
                let Some(b) = non_root.choose(rng) else { continue };
                let a = pick(rng);
                if tree.is_ancestor_or_self(b, &a) {
                    continue;
                }
                UpdateOp::Merge {
                    id_a: a,
                    id_b: (*b).clone(),
                    merged_text: format!("merged {salt}"),
                }
            }
        };
        return IntentUpdate::llm(op);
    }
    IntentUpdate::noop()
}
