use thiserror::Error;

use crate::ids::IntentId;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TripleError {
    #[error("malformed document: {0}")]
    Malformed(String),
    #[error("dangling reference: {what} `{id}` does not exist")]
    DanglingReference { what: String, id: String },
    #[error("intent tree contains a cycle through `{node}`")]
    CycleInIntentTree { node: String },
    #[error("intent `{node}` has more than one parent")]
    DuplicateParent { node: String },
    #[error("intent `{node}` is not reachable from the root")]
    Unreachable { node: String },
    #[error("duplicate id `{id}`")]
    DuplicateId { id: String },
    #[error("duplicate edge {src} -> {dst}")]
    DuplicateEdge { src: String, dst: String },
    #[error("invalid field: {what}")]
    InvalidField { what: String },
    #[error("round {round} does not match intent tree version {version}")]
    RoundMismatch { round: u64, version: u64 },
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TrackError {
    #[error("unknown intent id `{0}`")]
    UnknownIntentId(IntentId),
    #[error("moving `{id}` under `{new_parent}` would create a cycle")]
    CycleWouldForm { id: IntentId, new_parent: IntentId },
    #[error("intent `{0}` was already merged away earlier in this batch")]
    ConflictingUpdates(IntentId),
    #[error("invalid update: {0}")]
    InvalidUpdate(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SimplifyError {
    #[error("focus id `{0}` is not in the intent tree")]
    InvalidFocus(IntentId),
    #[error("`{0}` is not a supernode of this view")]
    NotASupernode(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MetricError {
    #[error("text produced no tokens")]
    EmptyText,
    #[error("corpus has no pairs")]
    EmptyCorpus,
    #[error("rate must be positive")]
    ZeroRate,
}
