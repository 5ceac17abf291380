//! Session registry: one writer per session, committed snapshots for
//! readers, durable events and push notifications.

use std::collections::{BTreeSet, HashMap};
use std::future::Future;
use std::sync::Arc;

use intentgraph_core::{IntentId, TaskId};
use serde::{Deserialize, Serialize};
use tokio::sync::{broadcast, watch, Mutex, RwLock};

use crate::session::{
    ConfirmOutcome, EditOutcome, FocusOutcome, ModifyOutcome, Models, NodeEdit, PromptOutcome,
    Session, SessionError,
};
use crate::store::{EventRecord, Store};

/// Pushed to subscribers after every committed transition.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Notification {
    pub session_id: String,
    pub seq: u64,
    pub kind: String,
    pub state: Arc<Session>,
}

struct Slot {
    writer: Mutex<Session>,
    committed: watch::Sender<Arc<Session>>,
}

impl Slot {
    fn new(session: Session) -> Arc<Self> {
        let (committed, _) = watch::channel(Arc::new(session.clone()));
        Arc::new(Self {
            writer: Mutex::new(session),
            committed,
        })
    }
}

pub struct Engine {
    models: Models,
    store: Option<Store>,
    sessions: RwLock<HashMap<String, Arc<Slot>>>,
    events: broadcast::Sender<Notification>,
}

impl Engine {
    /// Engine with persistence; sessions already on disk are restored.
    pub fn open(models: Models, store: Store) -> std::io::Result<Self> {
        let existing = store.load_all()?;
        let engine = Self::build(models, Some(store));
        {
            let mut map = engine.sessions.try_write().expect("fresh lock");
            for s in existing {
                map.insert(s.id.clone(), Slot::new(s));
            }
        }
        Ok(engine)
    }

    /// Engine keeping sessions in memory only.
    pub fn in_memory(models: Models) -> Self {
        Self::build(models, None)
    }

    fn build(models: Models, store: Option<Store>) -> Self {
        let (events, _) = broadcast::channel(256);
        Self {
            models,
            store,
            sessions: RwLock::new(HashMap::new()),
            events,
        }
    }

    pub fn models(&self) -> &Models {
        &self.models
    }

    pub fn subscribe(&self) -> broadcast::Receiver<Notification> {
        self.events.subscribe()
    }

    pub async fn session_ids(&self) -> Vec<String> {
        let mut ids: Vec<String> = self.sessions.read().await.keys().cloned().collect();
        ids.sort();
        ids
    }

    async fn slot(&self, id: &str) -> Result<Arc<Slot>, SessionError> {
        self.sessions
            .read()
            .await
            .get(id)
            .cloned()
            .ok_or_else(|| SessionError::NotFound(id.to_owned()))
    }

    fn persist(&self, kind: &str, input: serde_json::Value, state: &Session) -> Result<(), SessionError> {
        if let Some(store) = &self.store {
            store
                .append(&EventRecord {
                    seq: state.seq,
                    kind: kind.to_owned(),
                    input,
                    state: state.clone(),
                })
                .map_err(|e| SessionError::Storage(e.to_string()))?;
        }
        Ok(())
    }

    fn publish(&self, kind: &str, slot: &Slot, state: Session) {
        let state = Arc::new(state);
        slot.committed.send_replace(state.clone());
        let _ = self.events.send(Notification {
            session_id: state.id.clone(),
            seq: state.seq,
            kind: kind.to_owned(),
            state,
        });
    }

    pub async fn create_session(&self) -> Result<Arc<Session>, SessionError> {
        let mut session = Session::new(uuid::Uuid::new_v4().to_string());
        session.seq = 1;
        self.persist("created", serde_json::Value::Null, &session)?;
        let slot = Slot::new(session.clone());
        self.sessions
            .write()
            .await
            .insert(session.id.clone(), slot.clone());
        self.publish("created", &slot, session);
        let state = slot.committed.borrow().clone();
        Ok(state)
    }

    /// Latest committed state; never waits for an in-flight writer.
    pub async fn state(&self, id: &str) -> Result<Arc<Session>, SessionError> {
        Ok(self.slot(id).await?.committed.borrow().clone())
    }

    /// Runs `op` on a copy of the session under its writer lock and commits
    /// the copy only if `op` succeeds and the event is durable.
    async fn transition<T, F, Fut>(
        &self,
        id: &str,
        kind: &str,
        input: serde_json::Value,
        op: F,
    ) -> Result<T, SessionError>
    where
        F: FnOnce(Session) -> Fut,
        Fut: Future<Output = (Session, Result<T, SessionError>)>,
    {
        let slot = self.slot(id).await?;
        let mut guard = slot.writer.lock().await;
        let (mut next, result) = op(guard.clone()).await;
        let value = result?;
        next.seq = guard.seq + 1;
        self.persist(kind, input, &next)?;
        *guard = next.clone();
        self.publish(kind, &slot, next);
        Ok(value)
    }

    pub async fn submit_prompt(&self, id: &str, prompt: &str) -> Result<PromptOutcome, SessionError> {
        let models = self.models.clone();
        self.transition(id, "prompt_submitted", serde_json::json!({ "prompt": prompt }), |mut s| async move {
            let r = s.submit_prompt(prompt, &models).await;
            (s, r)
        })
        .await
    }

    pub async fn apply_edits(&self, id: &str, edits: &[NodeEdit]) -> Result<EditOutcome, SessionError> {
        self.transition(id, "edits_applied", serde_json::json!({ "edits": edits }), |mut s| async move {
            let r = s.apply_node_edits(edits);
            (s, r)
        })
        .await
    }

    pub async fn modify(&self, id: &str, instruction: &str) -> Result<ModifyOutcome, SessionError> {
        let models = self.models.clone();
        self.transition(id, "graph_modified", serde_json::json!({ "instruction": instruction }), |mut s| async move {
            let r = s.modify_graph_nl(instruction, &models).await;
            (s, r)
        })
        .await
    }

    pub async fn confirm(&self, id: &str) -> Result<ConfirmOutcome, SessionError> {
        let models = self.models.clone();
        self.transition(id, "graph_confirmed", serde_json::Value::Null, |mut s| async move {
            let r = s.confirm_graph(&models).await;
            (s, r)
        })
        .await
    }

    pub async fn focus(&self, id: &str, intent: &IntentId) -> Result<FocusOutcome, SessionError> {
        self.transition(id, "intent_focused", serde_json::json!({ "intent_id": intent }), |mut s| async move {
            let r = s.focus_intent(intent);
            (s, r)
        })
        .await
    }

    pub async fn expand(&self, id: &str, supernode: &str) -> Result<BTreeSet<TaskId>, SessionError> {
        self.state(id).await?.expand(supernode)
    }
}
