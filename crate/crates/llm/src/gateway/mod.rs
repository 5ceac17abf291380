//! Uniform client for chat-completion backends.
//!
//! Every call names a [`Purpose`]; the purpose decides which configured
//! [`ModelRole`] serves it. Transports do a single attempt; [`Gateway`] owns
//! the retry policy, usage fallback and audit logging so that the HTTP and
//! mock transports behave identically above the wire.

mod config;
mod http;
mod mock;

use std::collections::HashMap;
use std::fs::{File, OpenOptions};
use std::io::Write;
use std::path::Path;
use std::sync::{Arc, Mutex};
use std::time::{Duration, Instant};

use async_trait::async_trait;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use config::{ConfigError, EndpointConfig, GatewayConfig};
pub use http::HttpTransport;
pub use mock::{MockFailure, MockStep, MockTransport, Responder};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum ModelRole {
    /// Conversational model: writes code.
    Conversational,
    /// Large model that turns prompts and code into triples.
    Extractor,
    /// Small distilled model that extracts triples in one step.
    Student,
}

/// What a call is for. Mocks are scripted per purpose.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Purpose {
    GenerateCode,
    ExtractTriple,
    StudentExtract,
    ProposeIntentUpdates,
    ModifyGraph,
    ConfirmGenerate,
    ConstructIntentTree,
    ParaphraseIntentTree,
    SimulateUser,
    AnalyzeExecution,
}

impl Purpose {
    pub fn role(self) -> ModelRole {
        match self {
            Purpose::GenerateCode | Purpose::ConfirmGenerate | Purpose::SimulateUser => {
                ModelRole::Conversational
            }
            Purpose::StudentExtract => ModelRole::Student,
            Purpose::ExtractTriple
            | Purpose::ProposeIntentUpdates
            | Purpose::ModifyGraph
            | Purpose::ConstructIntentTree
            | Purpose::ParaphraseIntentTree
            | Purpose::AnalyzeExecution => ModelRole::Extractor,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModelEndpoint {
    pub role: ModelRole,
    pub base_url: String,
    pub model_name: String,
    /// Name of the environment variable holding the API key, if any.
    pub api_key_ref: Option<String>,
    pub timeout_secs: u64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ChatRole {
    System,
    User,
    Assistant,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChatMessage {
    pub role: ChatRole,
    pub content: String,
}

impl ChatMessage {
    pub fn system(content: impl Into<String>) -> Self {
        Self {
            role: ChatRole::System,
            content: content.into(),
        }
    }

    pub fn user(content: impl Into<String>) -> Self {
        Self {
            role: ChatRole::User,
            content: content.into(),
        }
    }

    pub fn assistant(content: impl Into<String>) -> Self {
        Self {
            role: ChatRole::Assistant,
            content: content.into(),
        }
    }
}

/// One request. `context` is structured side information for local
/// responders; it never goes over the wire.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChatRequest {
    pub purpose: Purpose,
    pub messages: Vec<ChatMessage>,
    #[serde(default, skip_serializing_if = "serde_json::Value::is_null")]
    pub context: serde_json::Value,
}

impl ChatRequest {
    pub fn new(purpose: Purpose, messages: Vec<ChatMessage>) -> Self {
        Self {
            purpose,
            messages,
            context: serde_json::Value::Null,
        }
    }

    pub fn with_context(mut self, context: serde_json::Value) -> Self {
        self.context = context;
        self
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Usage {
    pub prompt_tokens: u64,
    pub completion_tokens: u64,
    /// Set when the backend omitted usage and whitespace counting was used.
    #[serde(default)]
    pub approximate: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChatExchange {
    pub purpose: Purpose,
    pub role: ModelRole,
    pub model: String,
    pub messages: Vec<ChatMessage>,
    pub response: String,
    pub usage: Usage,
    pub latency_ms: u64,
    pub attempts: u32,
}

/// Whitespace token count, the fallback when a backend reports no usage.
pub fn count_tokens(text: &str) -> u64 {
    text.split_whitespace().count() as u64
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GatewayError {
    #[error("request timed out")]
    Timeout,
    #[error("authentication failed: {0}")]
    AuthFailure(String),
    #[error("rate limited after {attempts} attempts")]
    RateLimited { attempts: u32 },
    #[error("backend unavailable after {attempts} attempts: {reason}")]
    Unavailable { attempts: u32, reason: String },
    #[error("malformed response: {0}")]
    MalformedResponse(String),
    #[error("no endpoint configured for role {0:?}")]
    MissingEndpoint(ModelRole),
}

/// Raw result of a single transport attempt.
#[derive(Clone, Debug, PartialEq)]
pub struct RawReply {
    pub content: String,
    pub usage: Option<Usage>,
    pub finish_reason: Option<String>,
    /// Transports that simulate time report it here instead of being timed.
    pub simulated_latency_ms: Option<u64>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum AttemptError {
    RateLimited,
    Timeout,
    Server(String),
    Auth(String),
    Malformed(String),
}

impl AttemptError {
    fn is_transient(&self) -> bool {
        matches!(
            self,
            AttemptError::RateLimited | AttemptError::Timeout | AttemptError::Server(_)
        )
    }
}

#[async_trait]
pub trait Transport: Send + Sync {
    async fn send(
        &self,
        endpoint: &ModelEndpoint,
        request: &ChatRequest,
    ) -> Result<RawReply, AttemptError>;
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct RetryPolicy {
    pub max_retries: u32,
    pub base_delay: Duration,
}

impl Default for RetryPolicy {
    fn default() -> Self {
        Self {
            max_retries: 2,
            base_delay: Duration::from_millis(500),
        }
    }
}

impl RetryPolicy {
    pub fn immediate() -> Self {
        Self {
            max_retries: 2,
            base_delay: Duration::ZERO,
        }
    }

    fn delay(&self, retry: u32) -> Duration {
        self.base_delay * 2u32.pow(retry)
    }
}

/// Line-delimited JSON audit log of every request and outcome.
pub struct AuditLog {
    file: Mutex<File>,
}

impl AuditLog {
    pub fn open(path: &Path) -> std::io::Result<Self> {
        if let Some(dir) = path.parent() {
            std::fs::create_dir_all(dir)?;
        }
        let file = OpenOptions::new().create(true).append(true).open(path)?;
        Ok(Self {
            file: Mutex::new(file),
        })
    }

    fn record(&self, entry: &serde_json::Value) {
        let mut f = self.file.lock().unwrap_or_else(|e| e.into_inner());
        // Audit failures must not fail the request.
        let _ = writeln!(f, "{entry}");
    }
}

#[derive(Clone)]
pub struct Gateway {
    endpoints: HashMap<ModelRole, ModelEndpoint>,
    transport: Arc<dyn Transport>,
    retry: RetryPolicy,
    audit: Option<Arc<AuditLog>>,
}

impl std::fmt::Debug for Gateway {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Gateway")
            .field("endpoints", &self.endpoints)
            .field("retry", &self.retry)
            .field("audit", &self.audit.is_some())
            .finish()
    }
}

impl Gateway {
    pub fn new(endpoints: Vec<ModelEndpoint>, transport: Arc<dyn Transport>) -> Self {
        Self {
            endpoints: endpoints.into_iter().map(|e| (e.role, e)).collect(),
            transport,
            retry: RetryPolicy::default(),
            audit: None,
        }
    }

    /// Gateway over a mock transport with a placeholder endpoint per role and
    /// no backoff delay.
    pub fn mock(transport: Arc<MockTransport>) -> Self {
        let endpoints = [ModelRole::Conversational, ModelRole::Extractor, ModelRole::Student]
            .into_iter()
            .map(|role| ModelEndpoint {
                role,
                base_url: "mock://local".into(),
                model_name: format!("mock-{role:?}").to_lowercase(),
                api_key_ref: None,
                timeout_secs: 1,
            })
            .collect();
        Self::new(endpoints, transport).with_retry(RetryPolicy::immediate())
    }

    pub fn with_retry(mut self, retry: RetryPolicy) -> Self {
        self.retry = retry;
        self
    }

    pub fn with_audit(mut self, audit: AuditLog) -> Self {
        self.audit = Some(Arc::new(audit));
        self
    }

    pub fn without_role(mut self, role: ModelRole) -> Self {
        self.endpoints.remove(&role);
        self
    }

    pub fn has_role(&self, role: ModelRole) -> bool {
        self.endpoints.contains_key(&role)
    }

    pub fn endpoint(&self, role: ModelRole) -> Option<&ModelEndpoint> {
        self.endpoints.get(&role)
    }

    pub async fn complete(&self, request: ChatRequest) -> Result<ChatExchange, GatewayError> {
        let role = request.purpose.role();
        let endpoint = self
            .endpoints
            .get(&role)
            .ok_or(GatewayError::MissingEndpoint(role))?;
        let result = self.complete_with(endpoint, &request).await;
        if let Some(audit) = &self.audit {
            audit.record(&serde_json::json!({
                "purpose": request.purpose,
                "role": role,
                "model": endpoint.model_name,
                "messages": request.messages,
                "outcome": match &result {
                    Ok(ex) => serde_json::json!({
                        "response": ex.response,
                        "usage": ex.usage,
                        "latency_ms": ex.latency_ms,
                        "attempts": ex.attempts,
                    }),
                    Err(e) => serde_json::json!({ "error": e.to_string() }),
                },
            }));
        }
        result
    }

    /// Sends to an explicit endpoint with retries on transient failures.
    pub async fn complete_with(
        &self,
        endpoint: &ModelEndpoint,
        request: &ChatRequest,
    ) -> Result<ChatExchange, GatewayError> {
        let started = Instant::now();
        let mut attempts = 0;
        let reply = loop {
            attempts += 1;
            match self.transport.send(endpoint, request).await {
                Ok(reply) => break reply,
                Err(e) if e.is_transient() && attempts <= self.retry.max_retries => {
                    tokio::time::sleep(self.retry.delay(attempts - 1)).await;
                }
                Err(e) => return Err(final_error(e, attempts)),
            }
        };
        if reply.finish_reason.as_deref() == Some("length") {
            return Err(GatewayError::MalformedResponse(
                "response was cut off at the token limit".into(),
            ));
        }
        let usage = reply.usage.unwrap_or_else(|| Usage {
            prompt_tokens: request.messages.iter().map(|m| count_tokens(&m.content)).sum(),
            completion_tokens: count_tokens(&reply.content),
            approximate: true,
        });
        let latency_ms = reply
            .simulated_latency_ms
            .unwrap_or_else(|| started.elapsed().as_millis() as u64);
        Ok(ChatExchange {
            purpose: request.purpose,
            role: endpoint.role,
            model: endpoint.model_name.clone(),
            messages: request.messages.clone(),
            response: reply.content,
            usage,
            latency_ms,
            attempts,
        })
    }
}

fn final_error(e: AttemptError, attempts: u32) -> GatewayError {
    match e {
        AttemptError::RateLimited => GatewayError::RateLimited { attempts },
        AttemptError::Timeout => GatewayError::Timeout,
        AttemptError::Server(reason) => GatewayError::Unavailable { attempts, reason },
        AttemptError::Auth(m) => GatewayError::AuthFailure(m),
        AttemptError::Malformed(m) => GatewayError::MalformedResponse(m),
    }
}
