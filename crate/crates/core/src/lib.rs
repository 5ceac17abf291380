//! Core data model and algorithms for intent–task alignment.
//!
//! * [`triple`]: intent tree, understanding graph, mapping, canonical form, diffs.
//! * [`tracker`]: typed intent updates across dialogue rounds.
//! * [`simplify`]: intent-aware quotient of the understanding graph.
//! * [`metrics`]: ROUGE/BLEU similarity and valid-token throughput.

pub mod error;
pub mod ids;
pub mod metrics;
pub mod simplify;
pub mod tracker;
pub mod triple;

pub use error::{MetricError, SimplifyError, TrackError, TripleError};
pub use ids::{IntentId, TaskId};
pub use simplify::{expand_supernode, simplify, CollapseMap, SimplifiedView, Supernode, ViewNode};
pub use tracker::{apply_updates, FocusSet, IntentUpdate, Provenance, TrackOutcome, UpdateBatch, UpdateOp};
pub use triple::{
    diff_graphs, EdgeKind, GraphDelta, IntentNode, IntentState, IntentTree, Mapping, TaskEdge,
    TaskNode, TaskOrigin, Triple, UnderstandingGraph,
};
