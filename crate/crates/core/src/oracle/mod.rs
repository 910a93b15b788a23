//! The single interface for every semantic judgment the engine makes.
//!
//! Two providers ship: [`RuleOracle`], a pure rule table used for tests and
//! replay, and [`RemoteOracle`], which maps each call onto one chat-completion
//! request. Every call may fail; callers fall back to the degraded result
//! documented on each method.

use std::collections::BTreeSet;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::OracleError;
use crate::model::{ActionSuggestion, NoteId, PointerTrace, ProcessLabel, SceneElement, TalkTip, TipCategory, TipId};
use crate::trace::OverlayDescriptor;

mod remote;
mod rules;

pub use remote::{ChatRequest, PromptSet, RemoteConfig, RemoteOracle, Transport, OPS};
pub(crate) use rules::rule_links;
pub use rules::{ActionTemplate, LabelKeywords, RuleConfig, RuleOracle, TipTemplate};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum SplitVerdict {
    Continue,
    NewTopic,
}

/// A tip proposed by the oracle, before the engine assigns an id.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TipDraft {
    pub category: TipCategory,
    pub text: String,
}

/// What the oracle sees of a prior note.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NoteDigest {
    pub id: NoteId,
    pub transcript: String,
    pub summary: Option<String>,
}

#[derive(Debug, Clone, Copy)]
pub struct ElementLinkRequest<'a> {
    pub transcript: &'a str,
    pub trace: &'a PointerTrace,
    pub overlay: &'a OverlayDescriptor,
    pub scene: &'a [SceneElement],
    /// Rasterized overlay for providers that take images.
    pub image_png: Option<&'a [u8]>,
}

pub trait SemanticOracle: Send + Sync {
    /// Degraded: `Continue`.
    fn judge_split(&self, buffer: &str, fragment: &str) -> Result<SplitVerdict, OracleError>;

    /// Degraded: handled by the enrichment retry policy.
    fn summarize(&self, transcript: &str) -> Result<String, OracleError>;

    /// Degraded: handled by the enrichment retry policy.
    fn classify_labels(&self, transcript: &str) -> Result<BTreeSet<ProcessLabel>, OracleError>;

    /// Degraded: no actions.
    fn suggest_actions(
        &self,
        transcript: &str,
        labels: &BTreeSet<ProcessLabel>,
    ) -> Result<Vec<ActionSuggestion>, OracleError>;

    /// Whether `new` resumes the thought of `prev`. Degraded: `false`.
    fn merge_check(&self, prev: &str, new: &str) -> Result<bool, OracleError>;

    /// Affinity in `[0, 1]` of a note to a thread's recent text. Degraded: `0`.
    fn thread_affinity(&self, note: &str, thread_context: &str) -> Result<f64, OracleError>;

    /// Degraded: no candidates.
    fn tip_candidates(&self, recent_transcript: &str, brief: &str) -> Result<Vec<TipDraft>, OracleError>;

    /// Picks the pooled tip worth interrupting for, if any. Degraded: `None`.
    fn tip_gate(&self, pool: &[TalkTip], window: &str) -> Result<Option<TipId>, OracleError>;

    /// Ids of prior notes relevant to the current speech, best first.
    /// Degraded: empty.
    fn related_notes(&self, window: &str, notes: &[NoteDigest]) -> Result<Vec<NoteId>, OracleError>;

    /// Ids of scene elements the note refers to. Degraded: the rule-based
    /// name/containment linking.
    fn element_link(&self, request: &ElementLinkRequest<'_>) -> Result<BTreeSet<String>, OracleError>;

    /// Whether `element_link` uses the rasterized overlay.
    fn wants_image(&self) -> bool {
        false
    }
}

impl<T: SemanticOracle + ?Sized> SemanticOracle for Arc<T> {
    fn judge_split(&self, buffer: &str, fragment: &str) -> Result<SplitVerdict, OracleError> {
        (**self).judge_split(buffer, fragment)
    }
    fn summarize(&self, transcript: &str) -> Result<String, OracleError> {
        (**self).summarize(transcript)
    }
    fn classify_labels(&self, transcript: &str) -> Result<BTreeSet<ProcessLabel>, OracleError> {
        (**self).classify_labels(transcript)
    }
    fn suggest_actions(
        &self,
        transcript: &str,
        labels: &BTreeSet<ProcessLabel>,
    ) -> Result<Vec<ActionSuggestion>, OracleError> {
        (**self).suggest_actions(transcript, labels)
    }
    fn merge_check(&self, prev: &str, new: &str) -> Result<bool, OracleError> {
        (**self).merge_check(prev, new)
    }
    fn thread_affinity(&self, note: &str, thread_context: &str) -> Result<f64, OracleError> {
        (**self).thread_affinity(note, thread_context)
    }
    fn tip_candidates(&self, recent_transcript: &str, brief: &str) -> Result<Vec<TipDraft>, OracleError> {
        (**self).tip_candidates(recent_transcript, brief)
    }
    fn tip_gate(&self, pool: &[TalkTip], window: &str) -> Result<Option<TipId>, OracleError> {
        (**self).tip_gate(pool, window)
    }
    fn related_notes(&self, window: &str, notes: &[NoteDigest]) -> Result<Vec<NoteId>, OracleError> {
        (**self).related_notes(window, notes)
    }
    fn element_link(&self, request: &ElementLinkRequest<'_>) -> Result<BTreeSet<String>, OracleError> {
        (**self).element_link(request)
    }
    fn wants_image(&self) -> bool {
        (**self).wants_image()
    }
}

/// Oracle whose every call fails. Useful to exercise degraded paths.
#[derive(Debug, Clone, Copy, Default)]
pub struct FailingOracle;

impl SemanticOracle for FailingOracle {
    fn judge_split(&self, _: &str, _: &str) -> Result<SplitVerdict, OracleError> {
        Err(OracleError::Unavailable)
    }
    fn summarize(&self, _: &str) -> Result<String, OracleError> {
        Err(OracleError::Unavailable)
    }
    fn classify_labels(&self, _: &str) -> Result<BTreeSet<ProcessLabel>, OracleError> {
        Err(OracleError::Unavailable)
    }
    fn suggest_actions(&self, _: &str, _: &BTreeSet<ProcessLabel>) -> Result<Vec<ActionSuggestion>, OracleError> {
        Err(OracleError::Unavailable)
    }
    fn merge_check(&self, _: &str, _: &str) -> Result<bool, OracleError> {
        Err(OracleError::Unavailable)
    }
    fn thread_affinity(&self, _: &str, _: &str) -> Result<f64, OracleError> {
        Err(OracleError::Unavailable)
    }
    fn tip_candidates(&self, _: &str, _: &str) -> Result<Vec<TipDraft>, OracleError> {
        Err(OracleError::Unavailable)
    }
    fn tip_gate(&self, _: &[TalkTip], _: &str) -> Result<Option<TipId>, OracleError> {
        Err(OracleError::Unavailable)
    }
    fn related_notes(&self, _: &str, _: &[NoteDigest]) -> Result<Vec<NoteId>, OracleError> {
        Err(OracleError::Unavailable)
    }
    fn element_link(&self, _: &ElementLinkRequest<'_>) -> Result<BTreeSet<String>, OracleError> {
        Err(OracleError::Unavailable)
    }
}
