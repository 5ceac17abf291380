//! HTTP and websocket surface, versioned under `/v1`.

use std::sync::Arc;

use axum::extract::ws::{Message, WebSocket, WebSocketUpgrade};
use axum::extract::{Path, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use intentgraph_core::IntentId;
use serde::Deserialize;
use serde_json::json;
use tokio::sync::broadcast::error::RecvError;

use crate::engine::Engine;
use crate::session::{NodeEdit, SessionError};

impl SessionError {
    pub fn status_code(&self) -> StatusCode {
        match self {
            SessionError::NotFound(_)
            | SessionError::UnknownIntentId(_)
            | SessionError::NotASupernode(_) => StatusCode::NOT_FOUND,
            SessionError::InvalidState { .. } | SessionError::NoGraph => StatusCode::CONFLICT,
            SessionError::InvalidEdit { .. } | SessionError::EmptyPrompt => {
                StatusCode::UNPROCESSABLE_ENTITY
            }
            SessionError::ExtractionFailed(_)
            | SessionError::InvalidTripleOutput(_)
            | SessionError::Gateway(_) => StatusCode::BAD_GATEWAY,
            SessionError::Storage(_) | SessionError::Template(_) => {
                StatusCode::INTERNAL_SERVER_ERROR
            }
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            SessionError::NotFound(_) => "NotFound",
            SessionError::InvalidState { .. } => "InvalidState",
            SessionError::ExtractionFailed(_) => "ExtractionFailed",
            SessionError::InvalidEdit { .. } => "InvalidEdit",
            SessionError::InvalidTripleOutput(_) => "InvalidTripleOutput",
            SessionError::Gateway(_) => "GatewayError",
            SessionError::UnknownIntentId(_) => "UnknownIntentId",
            SessionError::NotASupernode(_) => "NotASupernode",
            SessionError::EmptyPrompt => "EmptyPrompt",
            SessionError::NoGraph => "NoGraph",
            SessionError::Storage(_) => "Storage",
            SessionError::Template(_) => "Template",
        }
    }
}

impl IntoResponse for SessionError {
    fn into_response(self) -> Response {
        let body = json!({ "error": self.kind(), "message": self.to_string() });
        (self.status_code(), Json(body)).into_response()
    }
}

type ApiResult = Result<Response, SessionError>;

fn ok<T: serde::Serialize>(value: T) -> ApiResult {
    Ok(Json(value).into_response())
}

#[derive(Deserialize)]
struct PromptBody {
    prompt: String,
}

#[derive(Deserialize)]
struct EditsBody {
    edits: Vec<NodeEdit>,
}

#[derive(Deserialize)]
struct ModifyBody {
    instruction: String,
}

#[derive(Deserialize)]
struct FocusBody {
    intent_id: IntentId,
}

async fn create(State(engine): State<Arc<Engine>>) -> ApiResult {
    let s = engine.create_session().await?;
    Ok((StatusCode::CREATED, Json(s.as_ref().clone())).into_response())
}

async fn list(State(engine): State<Arc<Engine>>) -> ApiResult {
    ok(json!({ "sessions": engine.session_ids().await }))
}

async fn state(State(engine): State<Arc<Engine>>, Path(id): Path<String>) -> ApiResult {
    ok(engine.state(&id).await?)
}

async fn prompt(
    State(engine): State<Arc<Engine>>,
    Path(id): Path<String>,
    Json(body): Json<PromptBody>,
) -> ApiResult {
    ok(engine.submit_prompt(&id, &body.prompt).await?)
}

async fn edits(
    State(engine): State<Arc<Engine>>,
    Path(id): Path<String>,
    Json(body): Json<EditsBody>,
) -> ApiResult {
    ok(engine.apply_edits(&id, &body.edits).await?)
}

async fn modify(
    State(engine): State<Arc<Engine>>,
    Path(id): Path<String>,
    Json(body): Json<ModifyBody>,
) -> ApiResult {
    ok(engine.modify(&id, &body.instruction).await?)
}

async fn confirm(State(engine): State<Arc<Engine>>, Path(id): Path<String>) -> ApiResult {
    ok(engine.confirm(&id).await?)
}

async fn focus(
    State(engine): State<Arc<Engine>>,
    Path(id): Path<String>,
    Json(body): Json<FocusBody>,
) -> ApiResult {
    ok(engine.focus(&id, &body.intent_id).await?)
}

async fn expand(
    State(engine): State<Arc<Engine>>,
    Path((id, node)): Path<(String, String)>,
) -> ApiResult {
    let members = engine.expand(&id, &node).await?;
    ok(json!({ "supernode_id": node, "member_ids": members }))
}

async fn events(
    State(engine): State<Arc<Engine>>,
    Path(id): Path<String>,
    ws: WebSocketUpgrade,
) -> ApiResult {
    let current = engine.state(&id).await?;
    Ok(ws.on_upgrade(move |socket| push(socket, engine, id, current)))
}

/// Sends the current state, then one message per committed transition.
async fn push(
    mut socket: WebSocket,
    engine: Arc<Engine>,
    id: String,
    current: Arc<crate::session::Session>,
) {
    let mut rx = engine.subscribe();
    let hello = json!({ "session_id": id, "seq": current.seq, "kind": "current", "state": current });
    if socket.send(Message::Text(hello.to_string().into())).await.is_err() {
        return;
    }
    loop {
        tokio::select! {
            ev = rx.recv() => match ev {
                Ok(n) if n.session_id == id => {
                    let text = serde_json::to_string(&n).expect("notifications serialize");
                    if socket.send(Message::Text(text.into())).await.is_err() {
                        return;
                    }
                }
                Ok(_) => {}
                Err(RecvError::Lagged(_)) => {
                    let Ok(s) = engine.state(&id).await else { return };
                    let msg = json!({ "session_id": id, "seq": s.seq, "kind": "resync", "state": s });
                    if socket.send(Message::Text(msg.to_string().into())).await.is_err() {
                        return;
                    }
                }
                Err(RecvError::Closed) => return,
            },
            msg = socket.recv() => match msg {
                Some(Ok(Message::Close(_))) | None | Some(Err(_)) => return,
                Some(Ok(_)) => {}
            },
        }
    }
}

async fn health() -> ApiResult {
    ok(json!({ "status": "ok" }))
}

pub fn router(engine: Arc<Engine>) -> Router {
    Router::new()
        .route("/v1/health", get(health))
        .route("/v1/sessions", post(create).get(list))
        .route("/v1/sessions/{id}", get(state))
        .route("/v1/sessions/{id}/prompt", post(prompt))
        .route("/v1/sessions/{id}/edits", post(edits))
        .route("/v1/sessions/{id}/modify", post(modify))
        .route("/v1/sessions/{id}/confirm", post(confirm))
        .route("/v1/sessions/{id}/focus", post(focus))
        .route("/v1/sessions/{id}/supernodes/{node}", get(expand))
        .route("/v1/sessions/{id}/events", get(events))
        .with_state(engine)
}
