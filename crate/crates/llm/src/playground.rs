//! Multi-agent simulation producing multi-round prompt histories for the
//! distillation dataset.
//!
//! Four roles share one gateway: the intent-tree constructor, the code
//! generator, the execution analyzer and the domain user simulator. A
//! session runs until every intent is completed, five consecutive rounds
//! pass without progress, or the round budget is spent.

use std::collections::BTreeMap;

use futures::stream::{self, StreamExt};
use intentgraph_core::triple::IntentTreeDoc;
use intentgraph_core::{IntentId, IntentState, IntentTree, Triple};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::extractor::{distillation_pair, DistillationLine, ExtractError, Extractor};
use crate::gateway::{ChatRequest, Gateway, GatewayError, Purpose};
use crate::structured::{ask_validated, extract_code, extract_json, AskError};
use crate::templates::{TemplateError, Templates};

/// Consecutive no-progress rounds after which a session stalls.
pub const STAGNATION_LIMIT: u32 = 5;

#[derive(Debug, Error)]
pub enum PlaygroundError {
    #[error(transparent)]
    Gateway(#[from] GatewayError),
    #[error(transparent)]
    Template(#[from] TemplateError),
    #[error(transparent)]
    Extraction(#[from] ExtractError),
    #[error("task description is empty")]
    EmptyDescription,
    #[error("max_rounds must be at least 1")]
    ZeroRounds,
    #[error("no usable intent tree: {0}")]
    DegenerateTree(String),
    #[error("paraphrase changed the tree structure: {0}")]
    VariantMismatch(String),
    #[error("session is not running")]
    NotRunning,
    #[error("no incomplete subtask left to ask about")]
    NothingToRequest,
    #[error("generated code is empty")]
    EmptyCode,
    #[error("unparseable execution report: {0}")]
    UnparseableReport(String),
    #[error("verdict for unknown intent {0}")]
    InvalidVerdict(IntentId),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum PlaygroundStatus {
    Running,
    Completed,
    Stalled,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExecutionReport {
    #[serde(default)]
    pub predicted_outcomes: String,
    #[serde(default)]
    pub file_changes: Vec<String>,
    #[serde(default)]
    pub errors: Vec<String>,
    #[serde(default)]
    pub verdicts: BTreeMap<IntentId, IntentState>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct StateChange {
    pub id: IntentId,
    pub state: IntentState,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PlaygroundRound {
    pub round: u64,
    pub target: IntentId,
    pub prompt: String,
    pub code: String,
    pub execution_report: ExecutionReport,
    pub state_updates: Vec<StateChange>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PlaygroundSession {
    pub description: String,
    pub tree: IntentTree,
    pub transcript: Vec<PlaygroundRound>,
    pub stagnation_counter: u32,
    pub status: PlaygroundStatus,
}

impl PlaygroundSession {
    pub fn new(description: impl Into<String>, tree: IntentTree) -> Self {
        let mut s = Self {
            description: description.into(),
            tree,
            transcript: Vec::new(),
            stagnation_counter: 0,
            status: PlaygroundStatus::Running,
        };
        if s.tree.all_completed() {
            s.status = PlaygroundStatus::Completed;
        }
        s
    }

    pub fn next_round(&self) -> u64 {
        self.transcript.len() as u64 + 1
    }

    /// Records a finished round and advances the stagnation counter.
    pub fn commit_round(&mut self, round: PlaygroundRound) {
        if round.state_updates.is_empty() {
            self.stagnation_counter += 1;
        } else {
            self.stagnation_counter = 0;
        }
        self.transcript.push(round);
        if self.tree.all_completed() {
            self.status = PlaygroundStatus::Completed;
        } else if self.stagnation_counter >= STAGNATION_LIMIT {
            self.status = PlaygroundStatus::Stalled;
        }
    }
}

/// First incomplete leaf in preorder.
pub fn next_target(tree: &IntentTree) -> Option<&IntentId> {
    tree.leaves()
        .into_iter()
        .find(|id| tree.get(id).is_some_and(|n| n.state == IntentState::NotCompleted))
}

fn parse_tree(reply: &str) -> Result<IntentTree, String> {
    let value = extract_json(reply).ok_or("reply contains no JSON document")?;
    let mut doc: IntentTreeDoc =
        serde_json::from_value(value).map_err(|e| format!("not an intent tree: {e}"))?;
    doc.version = 0;
    for n in &mut doc.nodes {
        n.state = IntentState::NotCompleted;
    }
    doc.validate().map_err(|e| e.to_string())
}

fn tree_json(tree: &IntentTree) -> String {
    serde_json::to_string_pretty(tree).expect("trees serialize")
}

fn map_ask(e: AskError, rejected: impl FnOnce(String) -> PlaygroundError) -> PlaygroundError {
    match e {
        AskError::Gateway(g) => PlaygroundError::Gateway(g),
        AskError::Template(t) => PlaygroundError::Template(t),
        AskError::Rejected(r) => rejected(r),
    }
}

/// Decomposes a task description into an intent tree with at least two leaves.
pub async fn construct_intent_tree(
    description: &str,
    gateway: &Gateway,
    templates: &Templates,
) -> Result<IntentTree, PlaygroundError> {
    if description.trim().is_empty() {
        return Err(PlaygroundError::EmptyDescription);
    }
    let messages = templates.render("construct_intent_tree", &[("description", description)])?;
    let answer = ask_validated(
        gateway,
        templates,
        Purpose::ConstructIntentTree,
        messages,
        serde_json::json!({ "description": description }),
        |reply| {
            let tree = parse_tree(reply)?;
            match tree.leaves().len() {
                n if n < 2 => Err(format!("tree has {n} leaf, at least 2 are required")),
                _ => Ok(tree),
            }
        },
    )
    .await
    .map_err(|e| map_ask(e, PlaygroundError::DegenerateTree))?;
    Ok(answer.value)
}

/// `count` reworded copies of `tree` with identical ids and structure.
pub async fn paraphrase_variants(
    tree: &IntentTree,
    count: usize,
    gateway: &Gateway,
    templates: &Templates,
) -> Result<Vec<IntentTree>, PlaygroundError> {
    let json = tree_json(tree);
    let mut out = Vec::with_capacity(count);
    for k in 1..=count {
        let variant = k.to_string();
        let messages = templates.render(
            "paraphrase_intent_tree",
            &[("tree", json.as_str()), ("variant", variant.as_str())],
        )?;
        let answer = ask_validated(
            gateway,
            templates,
            Purpose::ParaphraseIntentTree,
            messages,
            serde_json::json!({ "tree": tree, "variant": k }),
            |reply| {
                let v = parse_tree(reply)?;
                if v.same_topology(tree) {
                    Ok(v)
                } else {
                    Err("ids or structure differ from the original tree".into())
                }
            },
        )
        .await
        .map_err(|e| map_ask(e, PlaygroundError::VariantMismatch))?;
        out.push(answer.value);
    }
    Ok(out)
}

/// The simulated user's next prompt, aimed at the first incomplete leaf.
pub async fn simulate_user_prompt(
    session: &PlaygroundSession,
    gateway: &Gateway,
    templates: &Templates,
) -> Result<String, PlaygroundError> {
    if session.status != PlaygroundStatus::Running {
        return Err(PlaygroundError::NotRunning);
    }
    let target = next_target(&session.tree).ok_or(PlaygroundError::NothingToRequest)?;
    let node = session.tree.get(target).expect("leaf ids come from the tree");
    let done: Vec<&str> = session
        .tree
        .leaves()
        .into_iter()
        .filter_map(|id| session.tree.get(id))
        .filter(|n| n.state == IntentState::Completed)
        .map(|n| n.text.as_str())
        .collect();
    let done = if done.is_empty() {
        "none".to_owned()
    } else {
        done.join("; ")
    };
    let root_text = &session.tree.get(session.tree.root()).expect("root exists").text;
    let round = session.next_round().to_string();
    let messages = templates.render(
        "simulate_user",
        &[
            ("goal", root_text.as_str()),
            ("round", round.as_str()),
            ("target", node.text.as_str()),
            ("done", done.as_str()),
        ],
    )?;
    let request = ChatRequest::new(Purpose::SimulateUser, messages).with_context(serde_json::json!({
        "goal": root_text,
        "round": session.next_round(),
        "target_id": target,
        "target_text": node.text,
    }));
    Ok(gateway.complete(request).await?.response.trim().to_owned())
}

/// Simulated execution of `code` against the subtasks of `tree`.
pub async fn analyze_execution(
    code: &str,
    tree: &IntentTree,
    gateway: &Gateway,
    templates: &Templates,
) -> Result<ExecutionReport, PlaygroundError> {
    if code.trim().is_empty() {
        return Err(PlaygroundError::EmptyCode);
    }
    let json = tree_json(tree);
    let messages = templates.render(
        "analyze_execution",
        &[("tree", json.as_str()), ("code", code)],
    )?;
    let answer = ask_validated(
        gateway,
        templates,
        Purpose::AnalyzeExecution,
        messages,
        serde_json::json!({ "tree": tree, "code": code }),
        |reply| {
            let value = extract_json(reply).ok_or("reply contains no JSON document")?;
            serde_json::from_value::<ExecutionReport>(value).map_err(|e| e.to_string())
        },
    )
    .await
    .map_err(|e| map_ask(e, PlaygroundError::UnparseableReport))?;
    let report = answer.value;
    if let Some(bad) = report.verdicts.keys().find(|id| !tree.contains(id)) {
        return Err(PlaygroundError::InvalidVerdict(bad.clone()));
    }
    Ok(report)
}

/// Applies completion verdicts; states never regress. An internal node
/// completes once all its children have. Returns the flips in order.
pub fn apply_report(tree: &mut IntentTree, report: &ExecutionReport) -> Vec<StateChange> {
    let mut changes = Vec::new();
    for (id, state) in &report.verdicts {
        let current = tree.get(id).map(|n| n.state);
        if *state == IntentState::Completed && current == Some(IntentState::NotCompleted) {
            tree.set_state(id, IntentState::Completed);
            changes.push(StateChange {
                id: id.clone(),
                state: IntentState::Completed,
            });
        }
    }
    let order: Vec<IntentId> = tree.preorder().into_iter().rev().cloned().collect();
    for id in order {
        let children = tree.children(&id);
        let done = !children.is_empty()
            && children
                .iter()
                .all(|c| tree.get(c).is_some_and(|n| n.state == IntentState::Completed));
        if done && tree.get(&id).is_some_and(|n| n.state == IntentState::NotCompleted) {
            tree.set_state(&id, IntentState::Completed);
            changes.push(StateChange {
                id,
                state: IntentState::Completed,
            });
        }
    }
    changes
}

/// Outcome of one simulated session. `error` is set when a failure cut the
/// loop short; everything before the failing round is kept.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SessionRun {
    pub session: PlaygroundSession,
    pub dataset: Vec<DistillationLine>,
    /// Triple after the last completed round.
    pub last_triple: Option<Triple>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

fn history_text(session: &PlaygroundSession) -> String {
    if session.transcript.is_empty() {
        return "(none)".to_owned();
    }
    session
        .transcript
        .iter()
        .map(|r| format!("User: {}\nAssistant:\n{}", r.prompt, r.code))
        .collect::<Vec<_>>()
        .join("\n\n")
}

async fn play_round(
    run: &mut SessionRun,
    gateway: &Gateway,
    templates: &Templates,
) -> Result<(), PlaygroundError> {
    let session = &run.session;
    let target = next_target(&session.tree)
        .ok_or(PlaygroundError::NothingToRequest)?
        .clone();
    let prompt = simulate_user_prompt(session, gateway, templates).await?;

    let history = history_text(session);
    let messages = templates.render(
        "generate_code",
        &[("history", history.as_str()), ("prompt", prompt.as_str())],
    )?;
    let request = ChatRequest::new(Purpose::GenerateCode, messages)
        .with_context(serde_json::json!({ "prompt": prompt }));
    let code = extract_code(&gateway.complete(request).await?.response);

    let report = analyze_execution(&code, &session.tree, gateway, templates).await?;
    let record = Extractor::new(gateway, templates)
        .teacher_stage2(&prompt, &code, run.last_triple.as_ref())
        .await?;
    let line = distillation_pair(&record).expect("teacher records always pair");

    let mut tree = session.tree.clone();
    let state_updates = apply_report(&mut tree, &report);
    let round = session.next_round();
    run.session.tree = tree;
    run.session.commit_round(PlaygroundRound {
        round,
        target,
        prompt,
        code,
        execution_report: report,
        state_updates,
    });
    run.dataset.push(line);
    run.last_triple = Some(record.triple);
    Ok(())
}

/// Runs the collaboration loop from an already constructed tree.
pub async fn run_loop(
    session: PlaygroundSession,
    gateway: &Gateway,
    templates: &Templates,
    max_rounds: u32,
) -> Result<SessionRun, PlaygroundError> {
    if max_rounds == 0 {
        return Err(PlaygroundError::ZeroRounds);
    }
    let mut run = SessionRun {
        session,
        dataset: Vec::new(),
        last_triple: None,
        error: None,
    };
    while run.session.status == PlaygroundStatus::Running
        && run.session.transcript.len() < max_rounds as usize
    {
        if let Err(e) = play_round(&mut run, gateway, templates).await {
            run.error = Some(e.to_string());
            break;
        }
    }
    Ok(run)
}

/// Initialization followed by the collaboration loop.
pub async fn run_session(
    description: &str,
    gateway: &Gateway,
    templates: &Templates,
    max_rounds: u32,
) -> Result<SessionRun, PlaygroundError> {
    if max_rounds == 0 {
        return Err(PlaygroundError::ZeroRounds);
    }
    let tree = construct_intent_tree(description, gateway, templates).await?;
    run_loop(PlaygroundSession::new(description, tree), gateway, templates, max_rounds).await
}

/// Runs one session per description with at most `workers` in flight.
/// Results come back in input order.
pub async fn run_many(
    descriptions: &[String],
    gateway: &Gateway,
    templates: &Templates,
    max_rounds: u32,
    workers: usize,
) -> Vec<Result<SessionRun, PlaygroundError>> {
    stream::iter(descriptions)
        .map(|d| run_session(d, gateway, templates, max_rounds))
        .buffered(workers.max(1))
        .collect()
        .await
}
