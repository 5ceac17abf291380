//! Interactive session server: prompt → triple → review and edit → confirm →
//! graph-conditioned code, with durable per-session state.

pub mod engine;
pub mod http;
pub mod session;
pub mod store;

pub use engine::{Engine, Notification};
pub use http::router;
pub use session::{
    ConfirmOutcome, EditOutcome, FocusOutcome, ModifyOutcome, Models, NodeEdit, Operation,
    PromptOutcome, Round, Session, SessionError, SessionStatus,
};
pub use store::{EventRecord, Store};
