//! Model-facing side of the system: the chat-completion gateway, intent
//! update proposals, triple extraction and the dataset playground.

pub mod demo;
pub mod extractor;
pub mod gateway;
pub mod playground;
pub mod reconcile;
pub mod structured;
pub mod templates;
pub mod tracking;

pub use demo::DemoResponder;
pub use extractor::{
    distillation_pair, emit_distillation_pair, DistillError, DistillationLine, ExtractError,
    ExtractionPath, ExtractionRecord, Extractor,
};
pub use gateway::{
    ChatExchange, ChatMessage, ChatRequest, Gateway, GatewayConfig, GatewayError, MockStep,
    MockTransport, ModelEndpoint, ModelRole, Purpose,
};
pub use templates::Templates;
pub use tracking::{propose_updates, ProposeError};
