//! Model-proposed intent updates.

use intentgraph_core::{apply_updates, IntentTree, IntentUpdate, Provenance, UpdateBatch};
use thiserror::Error;

use crate::gateway::{Gateway, GatewayError, Purpose};
use crate::structured::{ask_validated, extract_json, AskError};
use crate::templates::{TemplateError, Templates};

#[derive(Debug, Error)]
pub enum ProposeError {
    #[error(transparent)]
    Gateway(#[from] GatewayError),
    #[error(transparent)]
    Template(#[from] TemplateError),
    #[error("unparseable update proposal: {0}")]
    UnparseableProposal(String),
}

impl From<AskError> for ProposeError {
    fn from(e: AskError) -> Self {
        match e {
            AskError::Gateway(g) => ProposeError::Gateway(g),
            AskError::Template(t) => ProposeError::Template(t),
            AskError::Rejected(r) => ProposeError::UnparseableProposal(r),
        }
    }
}

/// Parses an update list (`{"updates": [...]}` or a bare array) and checks
/// that it applies cleanly to `tree`.
pub fn parse_proposal(tree: &IntentTree, reply: &str) -> Result<Vec<IntentUpdate>, String> {
    let value = extract_json(reply).ok_or("reply contains no JSON document")?;
    let updates = if value.is_array() {
        serde_json::from_value::<Vec<IntentUpdate>>(value)
    } else {
        serde_json::from_value::<UpdateBatch>(value).map(|b| b.updates)
    }
    .map_err(|e| format!("not an update list: {e}"))?;
    let updates: Vec<IntentUpdate> = updates
        .into_iter()
        .map(|u| IntentUpdate {
            provenance: Provenance::LlmProposed,
            ..u
        })
        .collect();
    apply_updates(tree, &updates).map_err(|e| format!("updates do not apply: {e}"))?;
    Ok(updates)
}

/// Asks the extractor model how `prompt` changes the intent tree.
pub async fn propose_updates(
    tree: &IntentTree,
    prompt: &str,
    gateway: &Gateway,
    templates: &Templates,
) -> Result<Vec<IntentUpdate>, ProposeError> {
    let tree_json = serde_json::to_string_pretty(tree).expect("trees serialize");
    let messages = templates.render(
        "propose_updates",
        &[("tree", tree_json.as_str()), ("prompt", prompt)],
    )?;
    let context = serde_json::json!({ "tree": tree, "prompt": prompt });
    let answer = ask_validated(
        gateway,
        templates,
        Purpose::ProposeIntentUpdates,
        messages,
        context,
        |reply| parse_proposal(tree, reply),
    )
    .await?;
    Ok(answer.value)
}
