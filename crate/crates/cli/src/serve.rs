use std::io::Write;
use std::net::SocketAddr;
use std::path::PathBuf;
use std::sync::Arc;

use clap::Args;
use intentgraph_server::{router, Engine, Store};

use crate::models::ModelArgs;
use crate::CliError;

#[derive(Args, Debug)]
pub struct ServeArgs {
    #[command(flatten)]
    pub models: ModelArgs,
    /// Address to bind; port 0 picks a free port.
    #[arg(long, default_value = "127.0.0.1:8080")]
    pub listen: SocketAddr,
    /// Directory for session event logs and snapshots. Sessions stay in
    /// memory when omitted.
    #[arg(long)]
    pub data_dir: Option<PathBuf>,
}

pub async fn run(args: ServeArgs) -> Result<(), CliError> {
    let models = args.models.models()?;
    let engine = match &args.data_dir {
        Some(dir) => {
            let store = Store::open(dir).map_err(|e| CliError::io(dir, e))?;
            Engine::open(models, store).map_err(|e| CliError::io(dir, e))?
        }
        None => Engine::in_memory(models),
    };
    let listener = tokio::net::TcpListener::bind(args.listen)
        .await
        .map_err(|e| CliError::Runtime(format!("cannot bind {}: {e}", args.listen)))?;
    let addr = listener
        .local_addr()
        .map_err(|e| CliError::Runtime(e.to_string()))?;
    let mode = if args.models.mock { " (mock models)" } else { "" };
    println!("intentgraph listening on http://{addr}/v1{mode}");
    let _ = std::io::stdout().flush();
    axum::serve(listener, router(Arc::new(engine)))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await
        .map_err(|e| CliError::Runtime(e.to_string()))
}
