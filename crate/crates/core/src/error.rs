use thiserror::Error;

use crate::model::{Millis, NoteId, TipId};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ModelError {
    #[error("span starts at {t_start} ms but ends at {t_end} ms")]
    InvertedSpan { t_start: Millis, t_end: Millis },
    #[error("final fragment has no text")]
    EmptyFinalFragment,
    #[error("pointer coordinate is not finite")]
    NonFiniteCoordinate,
    #[error("depth must be present exactly for 3d samples")]
    DepthMismatch,
    #[error("pointer trace is not ordered by time")]
    UnorderedTrace,
    #[error("unknown process label `{0}`")]
    UnknownLabel(String),
    #[error("action title is empty")]
    EmptyActionTitle,
    #[error("action title longer than 40 characters: `{0}`")]
    ActionTitleTooLong(String),
    #[error("note {0} has trace samples outside its window")]
    TraceOutsideWindow(NoteId),
    #[error("note {0} is enriched but has no labels")]
    UnlabeledEnrichedNote(NoteId),
    #[error("note {0} has more than three actions")]
    TooManyActions(NoteId),
    #[error("tip text must be 1..=80 characters: `{0}`")]
    BadTipText(String),
    #[error("tip {0} marked responded before it was shown")]
    ResponseWithoutDisplay(TipId),
    #[error("scene element id is empty")]
    EmptyElementId,
    #[error("scene element `{0}` has degenerate bounds")]
    DegenerateBounds(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ChunkError {
    #[error("partial fragments are not chunked")]
    NotFinal,
    #[error("fragment starts at {t_start} ms, before the buffered speech ended at {t_last_end} ms")]
    OutOfOrder { t_start: Millis, t_last_end: Millis },
    #[error(transparent)]
    Invalid(#[from] ModelError),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TipError {
    #[error("unknown tip {0}")]
    UnknownTip(TipId),
    #[error("tip {0} was never shown")]
    NotShown(TipId),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum OracleError {
    #[error("oracle call timed out")]
    Timeout,
    #[error("transport failure: {0}")]
    Transport(String),
    #[error("response violates schema: {0}")]
    Schema(String),
    #[error("provider unavailable")]
    Unavailable,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ConfigError {
    #[error("{field}: {message}")]
    Field { field: &'static str, message: String },
    #[error("cannot parse rule config: {0}")]
    Parse(String),
}

impl ConfigError {
    pub fn field(field: &'static str, message: impl Into<String>) -> Self {
        ConfigError::Field { field, message: message.into() }
    }
}

#[derive(Debug, Error)]
pub enum LogError {
    #[error("line {line}: {message}")]
    Corrupt { line: usize, message: String },
    #[error("log does not start with a config event")]
    MissingConfig,
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EngineError {
    #[error(transparent)]
    Chunk(#[from] ChunkError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Tip(#[from] TipError),
    #[error("unknown note {0}")]
    UnknownNote(NoteId),
    #[error("session already ended")]
    Ended,
}

#[derive(Debug, Error)]
pub enum ReplayError {
    #[error(transparent)]
    Log(#[from] LogError),
    #[error("invalid session config: {0}")]
    Config(#[from] ConfigError),
    #[error("event {seq}: input rejected on replay: {source}")]
    Rejected { seq: u64, source: EngineError },
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AnalyzeError {
    #[error("duration must be positive")]
    ZeroDuration,
}
