//! Network host for think-aloud sessions: a WebSocket stream per session,
//! HTTP queries, and one JSONL log file per session.

pub mod app;
pub mod frames;
pub mod provider;
pub mod session;

pub use app::{router, AppState};
pub use frames::Frame;
