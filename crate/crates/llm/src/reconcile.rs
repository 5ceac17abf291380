//! Re-keying freshly minted ids back to the previous round's ids when the
//! node is recognisably the same.

use std::collections::{BTreeMap, BTreeSet};

use intentgraph_core::triple::TripleDoc;
use intentgraph_core::{IntentId, TaskId, Triple};

/// Minimum normalized edit similarity for two labels to count as one node.
pub const SIMILARITY_THRESHOLD: f64 = 0.9;

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Renames {
    pub intents: BTreeMap<IntentId, IntentId>,
    pub tasks: BTreeMap<TaskId, TaskId>,
}

impl Renames {
    pub fn is_empty(&self) -> bool {
        self.intents.is_empty() && self.tasks.is_empty()
    }
}

/// Greedy one-to-one matching of new ids to vanished old ids, best score first.
fn match_labels<'a>(
    fresh: &[(&'a str, &'a str)],
    vanished: &[(&'a str, &'a str)],
) -> BTreeMap<String, String> {
    let mut candidates = Vec::new();
    for (new_id, new_label) in fresh {
        for (old_id, old_label) in vanished {
            let score = strsim::normalized_levenshtein(new_label, old_label);
            if score >= SIMILARITY_THRESHOLD {
                candidates.push((score, *new_id, *old_id));
            }
        }
    }
    candidates.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(b.1)).then(a.2.cmp(b.2)));
    let mut used_new = BTreeSet::new();
    let mut used_old = BTreeSet::new();
    let mut out = BTreeMap::new();
    for (_, new_id, old_id) in candidates {
        if used_new.contains(new_id) || used_old.contains(old_id) {
            continue;
        }
        used_new.insert(new_id);
        used_old.insert(old_id);
        out.insert(new_id.to_owned(), old_id.to_owned());
    }
    out
}

/// Rewrites ids in `doc` that were renamed relative to `prev`.
pub fn reconcile_ids(doc: &mut TripleDoc, prev: &Triple) -> Renames {
    let doc_tasks: BTreeSet<&str> = doc.graph.nodes.iter().map(|n| n.id.as_str()).collect();
    let fresh: Vec<(&str, &str)> = doc
        .graph
        .nodes
        .iter()
        .filter(|n| !prev.graph().contains(&n.id))
        .map(|n| (n.id.as_str(), n.label.as_str()))
        .collect();
    let vanished: Vec<(&str, &str)> = prev
        .graph()
        .nodes()
        .filter(|n| !doc_tasks.contains(n.id.as_str()))
        .map(|n| (n.id.as_str(), n.label.as_str()))
        .collect();
    let tasks: BTreeMap<TaskId, TaskId> = match_labels(&fresh, &vanished)
        .into_iter()
        .map(|(a, b)| (a.into(), b.into()))
        .collect();

    let prev_tree = prev.intent_tree();
    let doc_intents: BTreeSet<&str> = doc
        .intent_tree
        .nodes
        .iter()
        .map(|n| n.id.as_str())
        .collect();
    let fresh: Vec<(&str, &str)> = doc
        .intent_tree
        .nodes
        .iter()
        .filter(|n| !prev_tree.contains(&n.id))
        .map(|n| (n.id.as_str(), n.text.as_str()))
        .collect();
    let vanished: Vec<(&str, &str)> = prev_tree
        .nodes()
        .filter(|n| !doc_intents.contains(n.id.as_str()))
        .map(|n| (n.id.as_str(), n.text.as_str()))
        .collect();
    let intents: BTreeMap<IntentId, IntentId> = match_labels(&fresh, &vanished)
        .into_iter()
        .map(|(a, b)| (a.into(), b.into()))
        .collect();

    let t = |id: &mut TaskId| {
        if let Some(new) = tasks.get(id) {
            *id = new.clone();
        }
    };
    let i = |id: &mut IntentId| {
        if let Some(new) = intents.get(id) {
            *id = new.clone();
        }
    };
    for n in &mut doc.graph.nodes {
        t(&mut n.id);
    }
    for e in &mut doc.graph.edges {
        t(&mut e.src);
        t(&mut e.dst);
    }
    i(&mut doc.intent_tree.root);
    for n in &mut doc.intent_tree.nodes {
        i(&mut n.id);
        n.children.iter_mut().for_each(i);
    }
    for m in &mut doc.mapping {
        i(&mut m.intent_id);
        m.task_node_ids.iter_mut().for_each(t);
    }
    Renames { intents, tasks }
}
