//! Intent tracking: a deterministic tree-rewriting system over a closed
//! update vocabulary.
//!
//! The only nondeterminism in tracking is which updates get proposed; once a
//! list of [`IntentUpdate`]s exists, [`apply_updates`] is a pure function of the
//! tree and the list, applied strictly in order.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::error::TrackError;
use crate::ids::IntentId;
use crate::triple::{IntentNode, IntentState, IntentTree};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "SCREAMING_SNAKE_CASE")]
pub enum UpdateOp {
    Refine {
        id: IntentId,
        new_text: String,
    },
    /// `id` is optional; omitted ids are allocated from the new round number.
    Add {
        parent_id: IntentId,
        text: String,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        id: Option<IntentId>,
    },
    /// `id_a` survives with `merged_text`; `id_b` is absorbed into it.
    Merge {
        id_a: IntentId,
        id_b: IntentId,
        merged_text: String,
    },
    Reparent {
        id: IntentId,
        new_parent_id: IntentId,
    },
    MarkState {
        id: IntentId,
        state: IntentState,
    },
    Noop,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Provenance {
    #[default]
    LlmProposed,
    UserEdit,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct IntentUpdate {
    #[serde(flatten)]
    pub op: UpdateOp,
    #[serde(default)]
    pub provenance: Provenance,
}

impl IntentUpdate {
    pub fn llm(op: UpdateOp) -> Self {
        Self {
            op,
            provenance: Provenance::LlmProposed,
        }
    }

    pub fn user(op: UpdateOp) -> Self {
        Self {
            op,
            provenance: Provenance::UserEdit,
        }
    }

    pub fn noop() -> Self {
        Self::llm(UpdateOp::Noop)
    }
}

/// Wire form of an update list, shared by the model output contract and the
/// UI edit payload.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct UpdateBatch {
    pub updates: Vec<IntentUpdate>,
}

/// Intent ids changed in the latest round.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct FocusSet(BTreeSet<IntentId>);

impl FocusSet {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn all(tree: &IntentTree) -> Self {
        Self(tree.ids().cloned().collect())
    }

    pub fn contains(&self, id: &IntentId) -> bool {
        self.0.contains(id)
    }

    pub fn insert(&mut self, id: IntentId) {
        self.0.insert(id);
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn iter(&self) -> impl Iterator<Item = &IntentId> {
        self.0.iter()
    }
}

impl<I: Into<IntentId>> FromIterator<I> for FocusSet {
    fn from_iter<T: IntoIterator<Item = I>>(iter: T) -> Self {
        Self(iter.into_iter().map(Into::into).collect())
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TrackOutcome {
    pub tree: IntentTree,
    pub focus: FocusSet,
    /// Absorbed intent → surviving intent, for every MERGE in the batch.
    pub merged: BTreeMap<IntentId, IntentId>,
}

/// Applies `updates` in order and bumps the tree version by one.
pub fn apply_updates(
    tree: &IntentTree,
    updates: &[IntentUpdate],
) -> Result<TrackOutcome, TrackError> {
    let version = tree.version + 1;
    let mut work = Work {
        nodes: tree.nodes.clone(),
        root: tree.root.clone(),
        merged: BTreeMap::new(),
        focus: BTreeSet::new(),
        version,
        next_fresh: 1,
    };
    for update in updates {
        work.apply(&update.op)?;
    }
    let focus = work
        .focus
        .into_iter()
        .filter(|id| work.nodes.contains_key(id))
        .collect();
    Ok(TrackOutcome {
        tree: IntentTree {
            root: work.root,
            nodes: work.nodes,
            version,
        },
        focus: FocusSet(focus),
        merged: work.merged,
    })
}

struct Work {
    nodes: BTreeMap<IntentId, IntentNode>,
    root: IntentId,
    merged: BTreeMap<IntentId, IntentId>,
    focus: BTreeSet<IntentId>,
    version: u64,
    next_fresh: u64,
}

impl Work {
    fn check(&self, id: &IntentId) -> Result<(), TrackError> {
        if self.nodes.contains_key(id) {
            Ok(())
        } else if self.merged.contains_key(id) {
            Err(TrackError::ConflictingUpdates(id.clone()))
        } else {
            Err(TrackError::UnknownIntentId(id.clone()))
        }
    }

    fn non_empty(text: &str) -> Result<(), TrackError> {
        if text.trim().is_empty() {
            Err(TrackError::InvalidUpdate("intent text must not be empty".into()))
        } else {
            Ok(())
        }
    }

    fn parent_of(&self, id: &IntentId) -> Option<IntentId> {
        self.nodes
            .values()
            .find(|n| n.children.contains(id))
            .map(|n| n.id.clone())
    }

    fn in_subtree(&self, top: &IntentId, id: &IntentId) -> bool {
        let mut stack = vec![top];
        while let Some(cur) = stack.pop() {
            if cur == id {
                return true;
            }
            stack.extend(self.nodes[cur].children.iter());
        }
        false
    }

    fn detach(&mut self, id: &IntentId) {
        if let Some(p) = self.parent_of(id) {
            self.nodes
                .get_mut(&p)
                .expect("parent exists")
                .children
                .retain(|c| c != id);
        }
    }

    fn fresh_id(&mut self) -> IntentId {
        loop {
            let candidate = IntentId::new(format!("i{}.{}", self.version, self.next_fresh));
            self.next_fresh += 1;
            if !self.nodes.contains_key(&candidate) && !self.merged.contains_key(&candidate) {
                return candidate;
            }
        }
    }

    fn apply(&mut self, op: &UpdateOp) -> Result<(), TrackError> {
        match op {
            UpdateOp::Noop => {}
            UpdateOp::Refine { id, new_text } => {
                self.check(id)?;
                Self::non_empty(new_text)?;
                self.nodes.get_mut(id).expect("checked").text = new_text.clone();
                self.focus.insert(id.clone());
            }
            UpdateOp::Add {
                parent_id,
                text,
                id,
            } => {
                self.check(parent_id)?;
                Self::non_empty(text)?;
                let id = match id {
                    Some(id) if self.nodes.contains_key(id) || self.merged.contains_key(id) => {
                        return Err(TrackError::InvalidUpdate(format!("id `{id}` is already in use")));
                    }
                    Some(id) => id.clone(),
                    None => self.fresh_id(),
                };
                self.nodes
                    .insert(id.clone(), IntentNode::new(id.clone(), text.clone()));
                self.nodes
                    .get_mut(parent_id)
                    .expect("checked")
                    .children
                    .push(id.clone());
                self.focus.insert(id);
            }
            UpdateOp::Merge {
                id_a,
                id_b,
                merged_text,
            } => {
                self.check(id_a)?;
                self.check(id_b)?;
                if id_a == id_b {
                    return Err(TrackError::InvalidUpdate(format!(
                        "cannot merge `{id_a}` with itself"
                    )));
                }
                if *id_b == self.root {
                    return Err(TrackError::InvalidUpdate("the root cannot be absorbed".into()));
                }
                if self.in_subtree(id_b, id_a) {
                    return Err(TrackError::CycleWouldForm {
                        id: id_b.clone(),
                        new_parent: id_a.clone(),
                    });
                }
                Self::non_empty(merged_text)?;
                self.detach(id_b);
                let absorbed = self.nodes.remove(id_b).expect("checked");
                let survivor = self.nodes.get_mut(id_a).expect("checked");
                for c in absorbed.children {
                    if !survivor.children.contains(&c) {
                        survivor.children.push(c);
                    }
                }
                survivor.text = merged_text.clone();
                if absorbed.state != IntentState::Completed {
                    survivor.state = IntentState::NotCompleted;
                }
                for target in self.merged.values_mut() {
                    if target == id_b {
                        *target = id_a.clone();
                    }
                }
                self.merged.insert(id_b.clone(), id_a.clone());
                self.focus.remove(id_b);
                self.focus.insert(id_a.clone());
            }
            UpdateOp::Reparent { id, new_parent_id } => {
                self.check(id)?;
                self.check(new_parent_id)?;
                if *id == self.root {
                    return Err(TrackError::InvalidUpdate("the root cannot be reparented".into()));
                }
                if self.in_subtree(id, new_parent_id) {
                    return Err(TrackError::CycleWouldForm {
                        id: id.clone(),
                        new_parent: new_parent_id.clone(),
                    });
                }
                self.detach(id);
                self.nodes
                    .get_mut(new_parent_id)
                    .expect("checked")
                    .children
                    .push(id.clone());
                self.focus.insert(id.clone());
            }
            UpdateOp::MarkState { id, state } => {
                self.check(id)?;
                self.nodes.get_mut(id).expect("checked").state = *state;
            }
        }
        Ok(())
    }
}
