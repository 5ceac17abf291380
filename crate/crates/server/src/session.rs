//! One interactive session: prompt intake, graph review, edits, confirmation.
//!
//! Every operation works on a copy of the session and hands the copy back
//! only on success, so a failed call never leaves a half-applied state.

use std::collections::BTreeSet;

use intentgraph_core::{
    apply_updates, diff_graphs, expand_supernode, simplify, EdgeKind, FocusSet, GraphDelta,
    IntentId, IntentUpdate, SimplifiedView, TaskEdge, TaskId, TaskNode, TaskOrigin, Triple,
    UnderstandingGraph,
};
use intentgraph_llm::extractor::{parse_triple_reply, ExtractionPath, Extractor, Timings};
use intentgraph_llm::gateway::{ChatRequest, Gateway, GatewayError, ModelRole, Purpose};
use intentgraph_llm::structured::extract_code;
use intentgraph_llm::{propose_updates, Templates};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum SessionStatus {
    AwaitingPrompt,
    GraphReview,
    Generated,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Operation {
    SubmitPrompt,
    ApplyEdits,
    ModifyGraph,
    Confirm,
    Focus,
}

impl Operation {
    pub const ALL: [Operation; 5] = [
        Operation::SubmitPrompt,
        Operation::ApplyEdits,
        Operation::ModifyGraph,
        Operation::Confirm,
        Operation::Focus,
    ];

    /// States from which the operation may be called.
    pub fn allowed_from(self) -> &'static [SessionStatus] {
        use SessionStatus::*;
        match self {
            Operation::SubmitPrompt => &[AwaitingPrompt, Generated],
            Operation::ApplyEdits | Operation::ModifyGraph => &[GraphReview],
            Operation::Confirm | Operation::Focus => &[GraphReview, Generated],
        }
    }
}

#[derive(Debug, Error)]
pub enum SessionError {
    #[error("session {0} not found")]
    NotFound(String),
    #[error("{op:?} is not allowed while the session is {status:?}")]
    InvalidState {
        op: Operation,
        status: SessionStatus,
    },
    #[error("extraction failed: {0}")]
    ExtractionFailed(String),
    #[error("invalid edit #{index}: {reason}")]
    InvalidEdit { index: usize, reason: String },
    #[error("invalid triple output: {0}")]
    InvalidTripleOutput(String),
    #[error(transparent)]
    Gateway(#[from] GatewayError),
    #[error("unknown intent {0}")]
    UnknownIntentId(IntentId),
    #[error("{0} is not a supernode of the current view")]
    NotASupernode(String),
    #[error("prompt is empty")]
    EmptyPrompt,
    #[error("session has no graph yet")]
    NoGraph,
    #[error("storage: {0}")]
    Storage(String),
    #[error("template: {0}")]
    Template(String),
}

/// Node-level edit from the review panel.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "SCREAMING_SNAKE_CASE")]
pub enum NodeEdit {
    /// `id` may be supplied by the client; it must never have been used in
    /// the session. `intent_id` picks the owner explicitly.
    AddNode {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        id: Option<TaskId>,
        label: String,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        detail: Option<String>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        intent_id: Option<IntentId>,
    },
    DeleteNode {
        id: TaskId,
    },
    EditLabel {
        id: TaskId,
        label: String,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        detail: Option<String>,
    },
    AddEdge {
        src: TaskId,
        dst: TaskId,
        #[serde(default)]
        kind: EdgeKind,
    },
    DeleteEdge {
        src: TaskId,
        dst: TaskId,
        #[serde(default)]
        kind: EdgeKind,
    },
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Confirmation {
    /// Exact user message sent to the code model.
    pub conditioning: String,
    pub code: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Round {
    pub round: u64,
    pub prompt: String,
    pub path: ExtractionPath,
    pub updates: Vec<IntentUpdate>,
    pub timings: Timings,
    pub repairs: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub intermediate_code: Option<String>,
    #[serde(default)]
    pub confirmations: Vec<Confirmation>,
}

impl Round {
    pub fn code(&self) -> Option<&str> {
        self.confirmations.last().map(|c| c.code.as_str())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Session {
    pub id: String,
    pub status: SessionStatus,
    /// Number of committed transitions.
    pub seq: u64,
    pub transcript: Vec<Round>,
    pub current_triple: Option<Triple>,
    pub focus: FocusSet,
    pub current_view: Option<SimplifiedView>,
    /// Graph as extracted for the current round, before any review edits.
    pub review_base: Option<UnderstandingGraph>,
    /// Review changes not yet confirmed, relative to `review_base`.
    pub pending_edits: GraphDelta,
    /// Change made by the latest mutation, for highlighting.
    pub last_delta: GraphDelta,
    /// Task ids that existed once and may never be handed out again.
    pub retired_ids: BTreeSet<TaskId>,
    pub next_user_node: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PromptOutcome {
    pub triple: Triple,
    pub view: SimplifiedView,
    pub graph_delta: GraphDelta,
    pub focus: FocusSet,
    pub status: SessionStatus,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EditOutcome {
    pub triple: Triple,
    pub view: SimplifiedView,
    pub graph_delta: GraphDelta,
    pub view_recomputed: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModifyOutcome {
    pub triple: Triple,
    pub view: SimplifiedView,
    pub graph_delta: GraphDelta,
    pub focus: FocusSet,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfirmOutcome {
    pub round: u64,
    pub code: String,
    pub status: SessionStatus,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FocusOutcome {
    pub view: SimplifiedView,
    pub focus: FocusSet,
}

/// Model access shared by all sessions.
#[derive(Clone, Debug)]
pub struct Models {
    pub gateway: Gateway,
    pub templates: Templates,
}

fn view_of(triple: &Triple, focus: &FocusSet) -> SimplifiedView {
    simplify(triple, focus).expect("focus ids are kept within the tree")
}

impl Session {
    pub fn new(id: impl Into<String>) -> Self {
        Self {
            id: id.into(),
            status: SessionStatus::AwaitingPrompt,
            seq: 0,
            transcript: Vec::new(),
            current_triple: None,
            focus: FocusSet::new(),
            current_view: None,
            review_base: None,
            pending_edits: GraphDelta::default(),
            last_delta: GraphDelta::default(),
            retired_ids: BTreeSet::new(),
            next_user_node: 1,
        }
    }

    pub fn check(&self, op: Operation) -> Result<(), SessionError> {
        if op.allowed_from().contains(&self.status) {
            Ok(())
        } else {
            Err(SessionError::InvalidState {
                op,
                status: self.status,
            })
        }
    }

    fn triple(&self) -> Result<&Triple, SessionError> {
        self.current_triple.as_ref().ok_or(SessionError::NoGraph)
    }

    /// The view as it must be: `simplify(current_triple, focus)`.
    pub fn derived_view(&self) -> Option<SimplifiedView> {
        self.current_triple.as_ref().map(|t| view_of(t, &self.focus))
    }

    /// Previous rounds as dialogue text, for the code model.
    fn past_dialogue(&self, upto: usize) -> Vec<String> {
        self.transcript[..upto]
            .iter()
            .map(|r| {
                format!(
                    "User: {}\nAssistant:\n{}",
                    r.prompt,
                    r.code().unwrap_or("(no code generated)")
                )
            })
            .collect()
    }

    /// Prior rounds with their code plus the current round's prompt.
    pub fn conversation_history(&self) -> String {
        let Some(current) = self.transcript.last() else {
            return "(none)".to_owned();
        };
        let mut parts = self.past_dialogue(self.transcript.len() - 1);
        parts.push(format!("User: {}", current.prompt));
        parts.join("\n\n")
    }

    fn set_view(&mut self, view: SimplifiedView) {
        self.current_view = Some(view);
    }

    fn retire_graph_ids(&mut self, graph: &UnderstandingGraph) {
        self.retired_ids.extend(graph.ids().cloned());
    }

    pub async fn submit_prompt(
        &mut self,
        prompt: &str,
        models: &Models,
    ) -> Result<PromptOutcome, SessionError> {
        self.check(Operation::SubmitPrompt)?;
        if prompt.trim().is_empty() {
            return Err(SessionError::EmptyPrompt);
        }
        let failed = |e: &dyn std::fmt::Display| SessionError::ExtractionFailed(e.to_string());
        let prev = self.current_triple.clone();
        let tracked = match &prev {
            Some(p) => {
                let updates =
                    propose_updates(p.intent_tree(), prompt, &models.gateway, &models.templates)
                        .await
                        .map_err(|e| failed(&e))?;
                let outcome = apply_updates(p.intent_tree(), &updates).map_err(|e| failed(&e))?;
                Some((updates, outcome))
            }
            None => None,
        };

        let extractor = Extractor::new(&models.gateway, &models.templates);
        let record = if models.gateway.has_role(ModelRole::Student) {
            extractor.student(prompt, prev.as_ref()).await
        } else {
            let history = self.past_dialogue(self.transcript.len()).join("\n\n");
            let history = if history.is_empty() { "(none)".to_owned() } else { history };
            extractor.teacher(prompt, prev.as_ref(), &history).await
        }
        .map_err(|e| failed(&e))?;

        let (triple, focus, updates) = match tracked {
            Some((updates, outcome)) => (
                record
                    .triple
                    .with_tree_and_redirects(outcome.tree, &outcome.merged),
                outcome.focus,
                updates,
            ),
            None => {
                let focus = FocusSet::all(record.triple.intent_tree());
                (record.triple.clone(), focus, Vec::new())
            }
        };
        if let Some(id) = triple.graph().ids().find(|id| {
            self.retired_ids.contains(*id) && !prev.as_ref().is_some_and(|p| p.graph().contains(id))
        }) {
            return Err(SessionError::ExtractionFailed(format!(
                "extractor reused retired task id {id}"
            )));
        }

        let empty = UnderstandingGraph::new();
        let before = prev.as_ref().map_or(&empty, |p| p.graph());
        let delta = diff_graphs(before, triple.graph());
        let view = view_of(&triple, &focus);

        self.retire_graph_ids(triple.graph());
        self.transcript.push(Round {
            round: triple.round(),
            prompt: prompt.to_owned(),
            path: record.path,
            updates,
            timings: record.timings,
            repairs: record.repairs,
            intermediate_code: record.intermediate_code,
            confirmations: Vec::new(),
        });
        self.review_base = Some(triple.graph().clone());
        self.pending_edits = GraphDelta::default();
        self.last_delta = delta.clone();
        self.focus = focus.clone();
        self.set_view(view.clone());
        self.current_triple = Some(triple.clone());
        self.status = SessionStatus::GraphReview;
        Ok(PromptOutcome {
            triple,
            view,
            graph_delta: delta,
            focus,
            status: self.status,
        })
    }

    fn fresh_user_id(&mut self, graph: &UnderstandingGraph) -> TaskId {
        loop {
            let id = TaskId::from(format!("u{}", self.next_user_node));
            self.next_user_node += 1;
            if !graph.contains(&id) && !self.retired_ids.contains(&id) {
                return id;
            }
        }
    }

    /// Applies all edits or none of them.
    pub fn apply_node_edits(&mut self, edits: &[NodeEdit]) -> Result<EditOutcome, SessionError> {
        self.check(Operation::ApplyEdits)?;
        let triple = self.triple()?.clone();
        let tree = triple.intent_tree();
        let default_owner = match self.focus.len() {
            1 => self.focus.iter().next().cloned().expect("one element"),
            _ => tree.root().clone(),
        };
        let mut graph = triple.graph().clone();
        let mut claims: Vec<(IntentId, TaskId)> = Vec::new();
        for (index, edit) in edits.iter().enumerate() {
            let invalid = |reason: String| SessionError::InvalidEdit { index, reason };
            match edit {
                NodeEdit::AddNode {
                    id,
                    label,
                    detail,
                    intent_id,
                } => {
                    let id = match id {
                        Some(id) if self.retired_ids.contains(id) || graph.contains(id) => {
                            return Err(invalid(format!("id {id} was already used")))
                        }
                        Some(id) => id.clone(),
                        None => self.fresh_user_id(&graph),
                    };
                    if label.trim().is_empty() {
                        return Err(invalid("label is empty".into()));
                    }
                    let owner = match intent_id {
                        Some(i) if !tree.contains(i) => {
                            return Err(invalid(format!("unknown intent {i}")))
                        }
                        Some(i) => i.clone(),
                        None => default_owner.clone(),
                    };
                    let mut node = TaskNode::new(id.clone(), label.clone())
                        .with_origin(TaskOrigin::UserAdded);
                    node.detail = detail.clone();
                    graph.insert_node(node).map_err(|e| invalid(e.to_string()))?;
                    if &owner != tree.root() {
                        claims.push((owner, id));
                    }
                }
                NodeEdit::DeleteNode { id } => {
                    graph.remove_node(id).map_err(|e| invalid(e.to_string()))?;
                }
                NodeEdit::EditLabel { id, label, detail } => {
                    if label.trim().is_empty() {
                        return Err(invalid("label is empty".into()));
                    }
                    let mut node = graph
                        .node(id)
                        .cloned()
                        .ok_or_else(|| invalid(format!("unknown task node {id}")))?;
                    node.label = label.clone();
                    if detail.is_some() {
                        node.detail = detail.clone();
                    }
                    graph.update_node(node).map_err(|e| invalid(e.to_string()))?;
                }
                NodeEdit::AddEdge { src, dst, kind } => {
                    graph
                        .insert_edge(TaskEdge::new(src.clone(), dst.clone(), *kind))
                        .map_err(|e| invalid(e.to_string()))?;
                }
                NodeEdit::DeleteEdge { src, dst, kind } => {
                    graph
                        .remove_edge(&TaskEdge::new(src.clone(), dst.clone(), *kind))
                        .map_err(|e| invalid(e.to_string()))?;
                }
            }
        }
        let claims: Vec<_> = claims
            .into_iter()
            .filter(|(_, t)| graph.contains(t))
            .collect();
        let next = triple
            .with_graph_and_claims(graph, claims)
            .map_err(|e| SessionError::InvalidEdit {
                index: edits.len(),
                reason: e.to_string(),
            })?;
        let delta = diff_graphs(triple.graph(), next.graph());
        let recompute = delta.is_structural();
        let view = if recompute {
            view_of(&next, &self.focus)
        } else {
            let mut view = self.current_view.clone().unwrap_or_else(|| view_of(&next, &self.focus));
            for node in &delta.relabelled {
                view.relabel(node);
            }
            view
        };
        self.retire_graph_ids(next.graph());
        self.pending_edits = diff_graphs(
            self.review_base.as_ref().unwrap_or(triple.graph()),
            next.graph(),
        );
        self.last_delta = delta.clone();
        self.set_view(view.clone());
        self.current_triple = Some(next.clone());
        Ok(EditOutcome {
            triple: next,
            view,
            graph_delta: delta,
            view_recomputed: recompute,
        })
    }

    pub async fn modify_graph_nl(
        &mut self,
        instruction: &str,
        models: &Models,
    ) -> Result<ModifyOutcome, SessionError> {
        self.check(Operation::ModifyGraph)?;
        let current = self.triple()?.clone();
        let triple_json = current.to_canonical_json();
        let messages = models
            .templates
            .render(
                "modify_graph",
                &[("instruction", instruction), ("triple", triple_json.as_str())],
            )
            .map_err(|e| SessionError::Template(e.to_string()))?;
        let retired = &self.retired_ids;
        let validate = |reply: &str| -> Result<Triple, String> {
            let t = parse_triple_reply(reply, Some(&current), current.round())?;
            let reused = t
                .graph()
                .ids()
                .find(|id| retired.contains(*id) && !current.graph().contains(id))
                .cloned();
            match reused {
                Some(id) => Err(format!("task id {id} was used before and may not be reused")),
                None => Ok(t),
            }
        };
        let context = serde_json::json!({ "instruction": instruction, "triple": current });
        let mut request = ChatRequest::new(Purpose::ModifyGraph, messages.clone())
            .with_context(context.clone());
        let mut outcome = None;
        for attempt in 0..2 {
            let ex = models.gateway.complete(request.clone()).await?;
            match validate(&ex.response) {
                Ok(t) => {
                    outcome = Some(t);
                    break;
                }
                Err(reason) if attempt == 0 => {
                    let repair = models
                        .templates
                        .get("repair")
                        .and_then(|t| t.render_user(&[("error", reason.as_str())]))
                        .map_err(|e| SessionError::Template(e.to_string()))?;
                    request.messages.push(intentgraph_llm::ChatMessage::assistant(ex.response));
                    request.messages.push(intentgraph_llm::ChatMessage::user(repair));
                }
                Err(reason) => return Err(SessionError::InvalidTripleOutput(reason)),
            }
        }
        let mut next = outcome.expect("loop either sets the triple or returns");

        let mut graph = next.graph().clone();
        let fresh: Vec<TaskNode> = graph
            .nodes()
            .filter(|n| !current.graph().contains(&n.id) && n.origin != TaskOrigin::NlModified)
            .cloned()
            .collect();
        if !fresh.is_empty() {
            for mut n in fresh {
                n.origin = TaskOrigin::NlModified;
                graph.update_node(n).expect("node exists");
            }
            next = next.with_graph(graph);
        }

        let delta = diff_graphs(current.graph(), next.graph());
        let focus = if delta.is_empty() {
            self.focus
                .iter()
                .filter(|i| next.intent_tree().contains(i))
                .cloned()
                .collect()
        } else {
            let mut f = FocusSet::new();
            for id in delta.touched_nodes() {
                f.insert(next.owner_of(id).clone());
            }
            for id in &delta.removed_nodes {
                let owner = current.owner_of(id);
                if next.intent_tree().contains(owner) {
                    f.insert(owner.clone());
                }
            }
            for e in delta.added_edges.iter().chain(&delta.removed_edges) {
                for end in [&e.src, &e.dst] {
                    if next.graph().contains(end) {
                        f.insert(next.owner_of(end).clone());
                    }
                }
            }
            f
        };
        let view = view_of(&next, &focus);
        self.retire_graph_ids(next.graph());
        self.pending_edits = diff_graphs(
            self.review_base.as_ref().unwrap_or(current.graph()),
            next.graph(),
        );
        self.last_delta = delta.clone();
        self.focus = focus.clone();
        self.set_view(view.clone());
        self.current_triple = Some(next.clone());
        Ok(ModifyOutcome {
            triple: next,
            view,
            graph_delta: delta,
            focus,
        })
    }

    /// The user message that conditions code generation on the confirmed graph.
    pub fn conditioning_messages(
        &self,
        templates: &Templates,
    ) -> Result<Vec<intentgraph_llm::ChatMessage>, SessionError> {
        let triple = self.triple()?.to_canonical_json();
        let history = self.conversation_history();
        templates
            .render(
                "confirm_generate",
                &[("history", history.as_str()), ("triple", triple.as_str())],
            )
            .map_err(|e| SessionError::Template(e.to_string()))
    }

    pub async fn confirm_graph(&mut self, models: &Models) -> Result<ConfirmOutcome, SessionError> {
        self.check(Operation::Confirm)?;
        let triple = self.triple()?.clone();
        let messages = self.conditioning_messages(&models.templates)?;
        let conditioning = messages.last().expect("template has a user part").content.clone();
        let request = ChatRequest::new(Purpose::ConfirmGenerate, messages)
            .with_context(serde_json::json!({ "triple": triple }));
        let ex = models.gateway.complete(request).await?;
        let code = extract_code(&ex.response);
        let round = self.transcript.last_mut().expect("a triple implies a round");
        round.confirmations.push(Confirmation {
            conditioning,
            code: code.clone(),
        });
        let round = round.round;
        self.review_base = Some(triple.graph().clone());
        self.pending_edits = GraphDelta::default();
        self.status = SessionStatus::Generated;
        Ok(ConfirmOutcome {
            round,
            code,
            status: self.status,
        })
    }

    /// Focuses the view on one intent and its descendants.
    pub fn focus_intent(&mut self, intent: &IntentId) -> Result<FocusOutcome, SessionError> {
        self.check(Operation::Focus)?;
        let triple = self.triple()?;
        let tree = triple.intent_tree();
        if !tree.contains(intent) {
            return Err(SessionError::UnknownIntentId(intent.clone()));
        }
        let focus: FocusSet = tree.subtree(intent).into_iter().cloned().collect();
        let view = view_of(triple, &focus);
        self.focus = focus.clone();
        self.set_view(view.clone());
        Ok(FocusOutcome { view, focus })
    }

    pub fn expand(&self, supernode: &str) -> Result<BTreeSet<TaskId>, SessionError> {
        let view = self.current_view.as_ref().ok_or(SessionError::NoGraph)?;
        expand_supernode(view, &TaskId::from(supernode))
            .map_err(|_| SessionError::NotASupernode(supernode.to_owned()))
    }
}
