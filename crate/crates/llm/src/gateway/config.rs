use std::collections::HashMap;
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Duration;

use serde::Deserialize;
use thiserror::Error;

use super::{AuditLog, Gateway, HttpTransport, ModelEndpoint, ModelRole, RetryPolicy};

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {source}")]
    Read {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("invalid config: {0}")]
    Parse(String),
    #[error("endpoint {role:?}: base_url {url:?} is not a valid URL")]
    BadUrl { role: ModelRole, url: String },
    #[error("endpoint {role:?}: timeout_secs must be positive")]
    ZeroTimeout { role: ModelRole },
    #[error("endpoint {role:?}: environment variable {var} is not set")]
    MissingKey { role: ModelRole, var: String },
    #[error("cannot open audit log: {0}")]
    Audit(std::io::Error),
    #[error("http client: {0}")]
    Client(String),
}

/// One `[endpoints.<role>]` block.
#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EndpointConfig {
    pub base_url: String,
    pub model: String,
    #[serde(default)]
    pub api_key_env: Option<String>,
    #[serde(default = "default_timeout")]
    pub timeout_secs: u64,
}

fn default_timeout() -> u64 {
    120
}

#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct EndpointsTable {
    conversational: Option<EndpointConfig>,
    extractor: Option<EndpointConfig>,
    student: Option<EndpointConfig>,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RetryConfig {
    #[serde(default = "default_retries")]
    max_retries: u32,
    #[serde(default = "default_backoff")]
    base_delay_ms: u64,
}

fn default_retries() -> u32 {
    2
}

fn default_backoff() -> u64 {
    500
}

/// Gateway configuration file.
///
/// ```toml
/// audit_log = "logs/audit.jsonl"
///
/// [endpoints.conversational]
/// base_url = "https://api.example.com/v1"
/// model = "chat-large"
/// api_key_env = "CHAT_API_KEY"
/// timeout_secs = 60
/// ```
#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GatewayConfig {
    #[serde(default)]
    endpoints: EndpointsTable,
    #[serde(default)]
    pub audit_log: Option<PathBuf>,
    #[serde(default)]
    retry: Option<RetryConfig>,
}

impl GatewayConfig {
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Read {
            path: path.to_owned(),
            source,
        })?;
        let mut cfg = Self::parse(&text)?;
        if let (Some(log), Some(dir)) = (&cfg.audit_log, path.parent()) {
            if log.is_relative() {
                cfg.audit_log = Some(dir.join(log));
            }
        }
        Ok(cfg)
    }

    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        toml::from_str(text).map_err(|e| ConfigError::Parse(e.to_string()))
    }

    /// Validated endpoints, in role order.
    pub fn endpoints(&self) -> Result<Vec<ModelEndpoint>, ConfigError> {
        let table = [
            (ModelRole::Conversational, &self.endpoints.conversational),
            (ModelRole::Extractor, &self.endpoints.extractor),
            (ModelRole::Student, &self.endpoints.student),
        ];
        let mut out = Vec::new();
        for (role, cfg) in table {
            let Some(cfg) = cfg else { continue };
            match url::Url::parse(&cfg.base_url) {
                Ok(u) if matches!(u.scheme(), "http" | "https") => {}
                _ => {
                    return Err(ConfigError::BadUrl {
                        role,
                        url: cfg.base_url.clone(),
                    })
                }
            }
            if cfg.timeout_secs == 0 {
                return Err(ConfigError::ZeroTimeout { role });
            }
            out.push(ModelEndpoint {
                role,
                base_url: cfg.base_url.clone(),
                model_name: cfg.model.clone(),
                api_key_ref: cfg.api_key_env.clone(),
                timeout_secs: cfg.timeout_secs,
            });
        }
        Ok(out)
    }

    /// Builds an HTTP gateway, resolving API keys from the environment.
    pub fn build(&self) -> Result<Gateway, ConfigError> {
        self.build_with_env(|var| std::env::var(var).ok())
    }

    pub fn build_with_env(
        &self,
        env: impl Fn(&str) -> Option<String>,
    ) -> Result<Gateway, ConfigError> {
        let endpoints = self.endpoints()?;
        let mut keys = HashMap::new();
        for ep in &endpoints {
            if let Some(var) = &ep.api_key_ref {
                let key = env(var).ok_or_else(|| ConfigError::MissingKey {
                    role: ep.role,
                    var: var.clone(),
                })?;
                keys.insert(ep.role, key);
            }
        }
        let transport = HttpTransport::new(keys).map_err(|e| ConfigError::Client(e.to_string()))?;
        let mut gw = Gateway::new(endpoints, Arc::new(transport));
        if let Some(r) = &self.retry {
            gw = gw.with_retry(RetryPolicy {
                max_retries: r.max_retries,
                base_delay: Duration::from_millis(r.base_delay_ms),
            });
        }
        if let Some(path) = &self.audit_log {
            gw = gw.with_audit(AuditLog::open(path).map_err(ConfigError::Audit)?);
        }
        Ok(gw)
    }
}
