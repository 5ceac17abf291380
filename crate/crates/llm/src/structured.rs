//! Pulling structured documents out of model replies, with one repair retry.

use crate::gateway::{ChatExchange, ChatMessage, ChatRequest, Gateway, GatewayError, Purpose};
use crate::templates::{TemplateError, Templates};

/// First JSON object or array in `text`, looking inside a fenced block first.
pub fn extract_json(text: &str) -> Option<serde_json::Value> {
    let fenced = fenced_blocks(text);
    fenced
        .iter()
        .copied()
        .chain(std::iter::once(text))
        .find_map(first_json_value)
}

fn first_json_value(text: &str) -> Option<serde_json::Value> {
    text.char_indices()
        .filter(|(_, c)| *c == '{' || *c == '[')
        .find_map(|(i, _)| {
            serde_json::Deserializer::from_str(&text[i..])
                .into_iter::<serde_json::Value>()
                .next()
                .and_then(Result::ok)
        })
}

fn fenced_blocks(text: &str) -> Vec<&str> {
    let mut out = Vec::new();
    let mut rest = text;
    while let Some(start) = rest.find("```") {
        let after = &rest[start + 3..];
        let body_start = after.find('\n').map_or(after.len(), |n| n + 1);
        let body = &after[body_start..];
        match body.find("```") {
            Some(end) => {
                out.push(&body[..end]);
                rest = &body[end + 3..];
            }
            None => break,
        }
    }
    out
}

/// Contents of the first fenced block, or the trimmed reply when unfenced.
pub fn extract_code(text: &str) -> String {
    match fenced_blocks(text).first() {
        Some(block) => block.trim_end().to_owned(),
        None => text.trim().to_owned(),
    }
}

#[derive(Debug, thiserror::Error)]
pub(crate) enum AskError {
    #[error(transparent)]
    Gateway(#[from] GatewayError),
    #[error(transparent)]
    Template(#[from] TemplateError),
    #[error("{0}")]
    Rejected(String),
}

pub(crate) struct Answer<T> {
    pub value: T,
    pub exchanges: Vec<ChatExchange>,
    pub repairs: u32,
}

/// Sends `messages` and validates the reply. On rejection the validation
/// error is sent back once; a second rejection is final.
pub(crate) async fn ask_validated<T>(
    gateway: &Gateway,
    templates: &Templates,
    purpose: Purpose,
    messages: Vec<ChatMessage>,
    context: serde_json::Value,
    mut validate: impl FnMut(&str) -> Result<T, String>,
) -> Result<Answer<T>, AskError> {
    let mut messages = messages;
    let mut exchanges = Vec::new();
    for attempt in 0..2 {
        let request = ChatRequest::new(purpose, messages.clone()).with_context(context.clone());
        let ex = gateway.complete(request).await?;
        let verdict = validate(&ex.response);
        let reply = ex.response.clone();
        exchanges.push(ex);
        match verdict {
            Ok(value) => {
                return Ok(Answer {
                    value,
                    exchanges,
                    repairs: attempt,
                })
            }
            Err(reason) if attempt == 0 => {
                let repair = templates
                    .get("repair")?
                    .render_user(&[("error", reason.as_str())])?;
                messages.push(ChatMessage::assistant(reply));
                messages.push(ChatMessage::user(repair));
            }
            Err(reason) => return Err(AskError::Rejected(reason)),
        }
    }
    unreachable!("loop returns on the second attempt")
}
