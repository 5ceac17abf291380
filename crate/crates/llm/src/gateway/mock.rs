use std::collections::{BTreeMap, VecDeque};
use std::sync::Mutex;

use async_trait::async_trait;
use serde::{Deserialize, Serialize};

use super::{
    count_tokens, AttemptError, ChatRequest, ModelEndpoint, Purpose, RawReply, Transport, Usage,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MockFailure {
    RateLimited,
    Timeout,
    ServerError,
    Auth,
    Malformed,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MockReply {
    pub content: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub usage: Option<Usage>,
    #[serde(default)]
    pub truncated: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub latency_ms: Option<u64>,
}

/// One scripted transport attempt.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MockStep {
    Reply(MockReply),
    Fail(MockFailure),
}

impl MockStep {
    pub fn reply(content: impl Into<String>) -> Self {
        MockStep::Reply(MockReply {
            content: content.into(),
            usage: None,
            truncated: false,
            latency_ms: None,
        })
    }

    pub fn fail(kind: MockFailure) -> Self {
        MockStep::Fail(kind)
    }

    pub fn with_usage(self, prompt_tokens: u64, completion_tokens: u64) -> Self {
        self.map_reply(|r| {
            r.usage = Some(Usage {
                prompt_tokens,
                completion_tokens,
                approximate: false,
            })
        })
    }

    pub fn with_latency(self, ms: u64) -> Self {
        self.map_reply(|r| r.latency_ms = Some(ms))
    }

    pub fn truncated(self) -> Self {
        self.map_reply(|r| r.truncated = true)
    }

    fn map_reply(mut self, f: impl FnOnce(&mut MockReply)) -> Self {
        if let MockStep::Reply(r) = &mut self {
            f(r);
        }
        self
    }
}

/// Fallback for requests with no scripted step left.
pub trait Responder: Send + Sync {
    fn respond(&self, request: &ChatRequest) -> Option<String>;
}

/// Deterministic transport replaying per-purpose scripts.
///
/// Mock latency defaults to one millisecond per reply token plus one, so
/// throughput figures stay reproducible.
#[derive(Default)]
pub struct MockTransport {
    scripts: Mutex<BTreeMap<Purpose, VecDeque<MockStep>>>,
    requests: Mutex<Vec<ChatRequest>>,
    responder: Option<Box<dyn Responder>>,
}

impl MockTransport {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_responder(responder: impl Responder + 'static) -> Self {
        Self {
            responder: Some(Box::new(responder)),
            ..Self::default()
        }
    }

    /// Loads a script document: `{ "<PURPOSE>": [step, ...], ... }`.
    pub fn from_script_json(text: &str) -> Result<Self, serde_json::Error> {
        let scripts: BTreeMap<Purpose, VecDeque<MockStep>> = serde_json::from_str(text)?;
        Ok(Self {
            scripts: Mutex::new(scripts),
            ..Self::default()
        })
    }

    pub fn set_responder(&mut self, responder: impl Responder + 'static) {
        self.responder = Some(Box::new(responder));
    }

    /// Appends steps to the script for `purpose`.
    pub fn script(&self, purpose: Purpose, steps: impl IntoIterator<Item = MockStep>) {
        self.scripts
            .lock()
            .unwrap()
            .entry(purpose)
            .or_default()
            .extend(steps);
    }

    pub fn remaining(&self, purpose: Purpose) -> usize {
        self.scripts
            .lock()
            .unwrap()
            .get(&purpose)
            .map_or(0, VecDeque::len)
    }

    /// Every request seen, in arrival order.
    pub fn requests(&self) -> Vec<ChatRequest> {
        self.requests.lock().unwrap().clone()
    }

    pub fn requests_for(&self, purpose: Purpose) -> Vec<ChatRequest> {
        self.requests()
            .into_iter()
            .filter(|r| r.purpose == purpose)
            .collect()
    }
}

#[async_trait]
impl Transport for MockTransport {
    async fn send(
        &self,
        _endpoint: &ModelEndpoint,
        request: &ChatRequest,
    ) -> Result<RawReply, AttemptError> {
        self.requests.lock().unwrap().push(request.clone());
        let step = self
            .scripts
            .lock()
            .unwrap()
            .get_mut(&request.purpose)
            .and_then(VecDeque::pop_front);
        let reply = match step {
            Some(MockStep::Reply(r)) => r,
            Some(MockStep::Fail(kind)) => {
                return Err(match kind {
                    MockFailure::RateLimited => AttemptError::RateLimited,
                    MockFailure::Timeout => AttemptError::Timeout,
                    MockFailure::ServerError => AttemptError::Server("scripted failure".into()),
                    MockFailure::Auth => AttemptError::Auth("scripted failure".into()),
                    MockFailure::Malformed => AttemptError::Malformed("scripted failure".into()),
                })
            }
            None => match self.responder.as_ref().and_then(|r| r.respond(request)) {
                Some(content) => MockReply {
                    content,
                    usage: None,
                    truncated: false,
                    latency_ms: None,
                },
                None => {
                    return Err(AttemptError::Server(format!(
                        "no scripted reply for {:?}",
                        request.purpose
                    )))
                }
            },
        };
        let latency = reply
            .latency_ms
            .unwrap_or_else(|| count_tokens(&reply.content) + 1);
        Ok(RawReply {
            content: reply.content,
            usage: reply.usage,
            finish_reason: Some(if reply.truncated { "length" } else { "stop" }.into()),
            simulated_latency_ms: Some(latency),
        })
    }
}
