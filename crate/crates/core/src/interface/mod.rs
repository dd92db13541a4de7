//! Orchestration: configuration, the CLI, the annotation store and the
//! HTTP API behind the annotation UI.

pub mod cli;
pub mod config;
pub mod pipeline;
pub mod server;
pub mod store;

pub use config::{ExperimentConfig, PredictorKind, PredictorSpec};
pub use server::{router, AppState};
pub use store::{AnnotationStore, LogEntry};
