use std::path::{Path, PathBuf};
use std::sync::Arc;

use clap::Args;
use intentgraph_llm::gateway::{AuditLog, ModelRole};
use intentgraph_llm::{DemoResponder, Gateway, GatewayConfig, MockTransport, Templates};
use intentgraph_server::Models;

use crate::CliError;

/// Model selection flags shared by every command that talks to a model.
#[derive(Args, Debug, Clone, Default)]
pub struct ModelArgs {
    /// Gateway configuration file (TOML).
    #[arg(long, env = "INTENTGRAPH_CONFIG")]
    pub config: Option<PathBuf>,
    /// Answer every model call with the deterministic mock gateway.
    #[arg(long)]
    pub mock: bool,
    /// JSON file of scripted mock replies per purpose; unscripted calls fall
    /// back to the deterministic responder.
    #[arg(long, requires = "mock")]
    pub mock_script: Option<PathBuf>,
    /// Leave the student endpoint unbound in mock mode, so extraction takes
    /// the two-stage teacher path.
    #[arg(long, requires = "mock")]
    pub no_student: bool,
    /// Directory of prompt templates overriding the built-in ones.
    #[arg(long)]
    pub templates: Option<PathBuf>,
    /// Append every model exchange to this JSON Lines file.
    #[arg(long)]
    pub audit_log: Option<PathBuf>,
}

impl ModelArgs {
    pub fn models(&self) -> Result<Models, CliError> {
        let gateway = if self.mock {
            mock_gateway(self.mock_script.as_deref(), !self.no_student)?
        } else {
            let path = self.config.as_ref().ok_or_else(|| {
                CliError::Usage("either --config (or INTENTGRAPH_CONFIG) or --mock is required".into())
            })?;
            GatewayConfig::load(path)
                .and_then(|c| c.build())
                .map_err(|e| CliError::Validation(format!("{}: {e}", path.display())))?
        };
        let gateway = match &self.audit_log {
            Some(path) => gateway.with_audit(AuditLog::open(path).map_err(|e| CliError::io(path, e))?),
            None => gateway,
        };
        let templates = match &self.templates {
            Some(dir) => Templates::with_overrides(dir)
                .map_err(|e| CliError::Validation(format!("{}: {e}", dir.display())))?,
            None => Templates::builtin(),
        };
        Ok(Models { gateway, templates })
    }
}

pub fn mock_gateway(script: Option<&Path>, student: bool) -> Result<Gateway, CliError> {
    let mut transport = match script {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
            MockTransport::from_script_json(&text)
                .map_err(|e| CliError::Validation(format!("{}: {e}", path.display())))?
        }
        None => MockTransport::new(),
    };
    transport.set_responder(DemoResponder);
    let gateway = Gateway::mock(Arc::new(transport));
    Ok(if student {
        gateway
    } else {
        gateway.without_role(ModelRole::Student)
    })
}
