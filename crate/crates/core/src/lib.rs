//! Streaming think-aloud annotation.
//!
//! Final transcript fragments are chunked into notes, anchored to the pointer
//! trace, enriched by a [`SemanticOracle`], merged and grouped into threads.
//! Tips and reminders are scheduled on a one-second tick. Every session is an
//! append-only event log that replays to the same bytes under the rule-based
//! oracle.

pub mod analyzer;
pub mod chunker;
pub mod config;
pub mod engine;
pub mod error;
pub mod event;
pub mod model;
pub mod notes;
pub mod oracle;
pub mod reminders;
pub mod replay;
pub mod synth;
pub mod text;
pub mod threader;
pub mod tips;
pub mod trace;

pub use chunker::{Chunker, PromotedSegment, PromotionCause};
pub use config::{Canvas, EngineParams, Mode, SessionConfig};
pub use engine::{ClientMessage, Engine, Job, JobMode, JobOutcome, JobRunner};
pub use error::{
    AnalyzeError, ChunkError, ConfigError, EngineError, LogError, ModelError, OracleError, ReplayError, TipError,
};
pub use event::{EventBody, SessionEvent};
pub use model::{
    ActionSuggestion, AnchorConfidence, AnchorPoint, Bounds, EnrichmentState, Millis, NoteId, PointerSample,
    PointerTrace, ProcessLabel, SceneElement, TalkNote, TalkReminder, TalkThread, TalkTip, ThreadId, TipCategory,
    TipId, TranscriptFragment, Utterance, View,
};
pub use oracle::{FailingOracle, RuleOracle, SemanticOracle};
pub use replay::{replay, replay_jsonl};
pub use text::Lexicon;
pub use threader::{filter_notes, ThreadGroup, Threader};
pub use trace::TraceStore;
