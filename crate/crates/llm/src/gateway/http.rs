use std::collections::HashMap;
use std::time::Duration;

use async_trait::async_trait;
use serde::Deserialize;

use super::{AttemptError, ChatRequest, ModelEndpoint, ModelRole, RawReply, Transport, Usage};

/// Chat-completions client over HTTP.
#[derive(Debug)]
pub struct HttpTransport {
    client: reqwest::Client,
    keys: HashMap<ModelRole, String>,
}

#[derive(Deserialize)]
struct CompletionBody {
    choices: Vec<Choice>,
    usage: Option<WireUsage>,
}

#[derive(Deserialize)]
struct Choice {
    message: WireMessage,
    finish_reason: Option<String>,
}

#[derive(Deserialize)]
struct WireMessage {
    content: Option<String>,
}

#[derive(Deserialize)]
struct WireUsage {
    prompt_tokens: u64,
    completion_tokens: u64,
}

impl HttpTransport {
    pub fn new(keys: HashMap<ModelRole, String>) -> reqwest::Result<Self> {
        Ok(Self {
            client: reqwest::Client::builder().build()?,
            keys,
        })
    }
}

fn completions_url(base: &str) -> String {
    format!("{}/chat/completions", base.trim_end_matches('/'))
}

#[async_trait]
impl Transport for HttpTransport {
    async fn send(
        &self,
        endpoint: &ModelEndpoint,
        request: &ChatRequest,
    ) -> Result<RawReply, AttemptError> {
        let body = serde_json::json!({
            "model": endpoint.model_name,
            "messages": request.messages,
        });
        let mut req = self
            .client
            .post(completions_url(&endpoint.base_url))
            .timeout(Duration::from_secs(endpoint.timeout_secs))
            .json(&body);
        if let Some(key) = self.keys.get(&endpoint.role) {
            req = req.bearer_auth(key);
        }
        let resp = req.send().await.map_err(|e| {
            if e.is_timeout() {
                AttemptError::Timeout
            } else {
                AttemptError::Server(e.to_string())
            }
        })?;
        let status = resp.status();
        if status.as_u16() == 401 || status.as_u16() == 403 {
            return Err(AttemptError::Auth(format!("status {status}")));
        }
        if status.as_u16() == 429 {
            return Err(AttemptError::RateLimited);
        }
        if status.is_server_error() || status.as_u16() == 408 {
            return Err(AttemptError::Server(format!("status {status}")));
        }
        if !status.is_success() {
            return Err(AttemptError::Malformed(format!("status {status}")));
        }
        let text = resp.text().await.map_err(|e| {
            if e.is_timeout() {
                AttemptError::Timeout
            } else {
                AttemptError::Server(e.to_string())
            }
        })?;
        let body: CompletionBody =
            serde_json::from_str(&text).map_err(|e| AttemptError::Malformed(e.to_string()))?;
        let choice = body
            .choices
            .into_iter()
            .next()
            .ok_or_else(|| AttemptError::Malformed("reply has no choices".into()))?;
        let content = choice
            .message
            .content
            .ok_or_else(|| AttemptError::Malformed("reply has no content".into()))?;
        Ok(RawReply {
            content,
            usage: body.usage.map(|u| Usage {
                prompt_tokens: u.prompt_tokens,
                completion_tokens: u.completion_tokens,
                approximate: false,
            }),
            finish_reason: choice.finish_reason,
            simulated_latency_ms: None,
        })
    }
}
