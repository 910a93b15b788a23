//! Domain types shared across the engine.
//!
//! Everything here is a plain value. Timestamps are milliseconds relative to
//! session start so that a recorded session replays identically.

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::ModelError;

/// Milliseconds since session start.
pub type Millis = u64;

/// Margin applied on both sides of an utterance window when slicing traces.
pub const TRACE_MARGIN_MS: Millis = 500;

/// Maximum length of an action suggestion title, in characters.
pub const ACTION_TITLE_MAX: usize = 40;

/// Maximum length of a tip text, in characters.
pub const TIP_TEXT_MAX: usize = 80;

/// Maximum number of action suggestions attached to one note.
pub const MAX_ACTIONS: usize = 3;

macro_rules! id_type {
    ($name:ident, $prefix:literal) => {
        #[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
        #[serde(transparent)]
        pub struct $name(pub u64);

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                write!(f, concat!($prefix, "{}"), self.0)
            }
        }
    };
}

id_type!(NoteId, "n");
id_type!(ThreadId, "th");
id_type!(TipId, "tip");

/// A piece of recognized speech, either a live partial or a finalized chunk.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TranscriptFragment {
    pub text: String,
    pub t_start: Millis,
    pub t_end: Millis,
    pub is_final: bool,
}

impl TranscriptFragment {
    pub fn final_text(text: impl Into<String>, t_start: Millis, t_end: Millis) -> Self {
        Self { text: text.into(), t_start, t_end, is_final: true }
    }

    pub fn partial(text: impl Into<String>, t_start: Millis, t_end: Millis) -> Self {
        Self { text: text.into(), t_start, t_end, is_final: false }
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        if self.t_start > self.t_end {
            return Err(ModelError::InvertedSpan { t_start: self.t_start, t_end: self.t_end });
        }
        if self.is_final && self.text.trim().is_empty() {
            return Err(ModelError::EmptyFinalFragment);
        }
        Ok(())
    }
}

/// Which canvas the pointer was over.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub enum View {
    #[default]
    #[serde(rename = "2d")]
    TwoD,
    #[serde(rename = "3d")]
    ThreeD,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PointerSample {
    pub x: f64,
    pub y: f64,
    pub t: Millis,
    #[serde(default)]
    pub view: View,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub z: Option<f64>,
}

impl PointerSample {
    pub fn new_2d(x: f64, y: f64, t: Millis) -> Self {
        Self { x, y, t, view: View::TwoD, z: None }
    }

    pub fn new_3d(x: f64, y: f64, z: f64, t: Millis) -> Self {
        Self { x, y, t, view: View::ThreeD, z: Some(z) }
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        if !self.x.is_finite() || !self.y.is_finite() || self.z.is_some_and(|z| !z.is_finite()) {
            return Err(ModelError::NonFiniteCoordinate);
        }
        match (self.view, self.z) {
            (View::TwoD, None) | (View::ThreeD, Some(_)) => Ok(()),
            _ => Err(ModelError::DepthMismatch),
        }
    }
}

/// Time-ordered pointer samples.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct PointerTrace {
    pub samples: Vec<PointerSample>,
}

impl PointerTrace {
    pub fn new(samples: Vec<PointerSample>) -> Result<Self, ModelError> {
        let trace = Self { samples };
        trace.validate()?;
        Ok(trace)
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        if self.samples.windows(2).any(|w| w[1].t < w[0].t) {
            return Err(ModelError::UnorderedTrace);
        }
        Ok(())
    }

    /// Concatenates `other` after `self`, skipping samples of `other` that do
    /// not come strictly after the last sample already present.
    pub fn concat(&self, other: &PointerTrace) -> PointerTrace {
        let mut samples = self.samples.clone();
        let last_t = samples.last().map(|s| s.t);
        samples.extend(other.samples.iter().filter(|s| last_t.is_none_or(|lt| s.t > lt)).copied());
        PointerTrace { samples }
    }
}

/// Kind of reasoning a note expresses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProcessLabel {
    DesignIntent,
    Process,
    ToDo,
    Important,
    Problem,
    Question,
}

impl ProcessLabel {
    pub const ALL: [ProcessLabel; 6] = [
        ProcessLabel::DesignIntent,
        ProcessLabel::Process,
        ProcessLabel::ToDo,
        ProcessLabel::Important,
        ProcessLabel::Problem,
        ProcessLabel::Question,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ProcessLabel::DesignIntent => "design_intent",
            ProcessLabel::Process => "process",
            ProcessLabel::ToDo => "to_do",
            ProcessLabel::Important => "important",
            ProcessLabel::Problem => "problem",
            ProcessLabel::Question => "question",
        }
    }
}

impl fmt::Display for ProcessLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for ProcessLabel {
    type Err = ModelError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let norm: String = s.chars().filter(|c| c.is_ascii_alphanumeric()).collect::<String>().to_ascii_lowercase();
        match norm.as_str() {
            "designintent" => Ok(ProcessLabel::DesignIntent),
            "process" => Ok(ProcessLabel::Process),
            "todo" => Ok(ProcessLabel::ToDo),
            "important" => Ok(ProcessLabel::Important),
            "problem" => Ok(ProcessLabel::Problem),
            "question" => Ok(ProcessLabel::Question),
            _ => Err(ModelError::UnknownLabel(s.to_string())),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AnchorConfidence {
    FromTrace,
    LastKnown,
    Fallback,
}

/// Where a note sits on the canvas.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AnchorPoint {
    pub x: f64,
    pub y: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub z: Option<f64>,
    pub view: View,
    pub confidence: AnchorConfidence,
}

/// An inert action label attached to a note. Never executed.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ActionSuggestion {
    pub title: String,
}

impl ActionSuggestion {
    pub fn new(title: impl Into<String>) -> Result<Self, ModelError> {
        let title = title.into();
        if title.trim().is_empty() {
            return Err(ModelError::EmptyActionTitle);
        }
        if title.chars().count() > ACTION_TITLE_MAX {
            return Err(ModelError::ActionTitleTooLong(title));
        }
        Ok(Self { title })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EnrichmentState {
    Pending,
    Enriched,
    Failed,
}

/// One finalized fragment as it was promoted into a note.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Utterance {
    pub text: String,
    pub t_start: Millis,
    pub t_end: Millis,
}

/// A promoted, spatially anchored unit of verbalized thought.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TalkNote {
    pub id: NoteId,
    pub transcript: String,
    pub t_start: Millis,
    pub t_end: Millis,
    pub summary: Option<String>,
    pub labels: BTreeSet<ProcessLabel>,
    pub actions: Vec<ActionSuggestion>,
    pub anchor: AnchorPoint,
    pub trace: PointerTrace,
    pub linked_elements: BTreeSet<String>,
    pub thread_id: Option<ThreadId>,
    pub merged_from: Vec<NoteId>,
    pub enrichment_state: EnrichmentState,
    pub utterances: Vec<Utterance>,
}

impl TalkNote {
    /// Checks the per-note invariants that do not need session context.
    pub fn validate(&self) -> Result<(), ModelError> {
        if self.t_start >= self.t_end {
            return Err(ModelError::InvertedSpan { t_start: self.t_start, t_end: self.t_end });
        }
        let lo = self.t_start.saturating_sub(TRACE_MARGIN_MS);
        let hi = self.t_end + TRACE_MARGIN_MS;
        if self.trace.samples.iter().any(|s| s.t < lo || s.t > hi) {
            return Err(ModelError::TraceOutsideWindow(self.id));
        }
        self.trace.validate()?;
        if self.enrichment_state == EnrichmentState::Enriched && self.labels.is_empty() {
            return Err(ModelError::UnlabeledEnrichedNote(self.id));
        }
        if self.actions.len() > MAX_ACTIONS {
            return Err(ModelError::TooManyActions(self.id));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TalkThread {
    pub id: ThreadId,
    pub title: String,
    pub note_ids: Vec<NoteId>,
    pub t_last: Millis,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TipCategory {
    PotentialIssue,
    NewIdea,
    ProbingQuestion,
}

impl TipCategory {
    pub const ALL: [TipCategory; 3] = [TipCategory::PotentialIssue, TipCategory::NewIdea, TipCategory::ProbingQuestion];
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TalkTip {
    pub id: TipId,
    pub category: TipCategory,
    pub text: String,
    pub created_t: Millis,
    pub shown_t: Option<Millis>,
    pub responded: bool,
}

impl TalkTip {
    pub fn validate(&self) -> Result<(), ModelError> {
        if self.text.trim().is_empty() || self.text.chars().count() > TIP_TEXT_MAX {
            return Err(ModelError::BadTipText(self.text.clone()));
        }
        if self.responded && self.shown_t.is_none() {
            return Err(ModelError::ResponseWithoutDisplay(self.id));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TalkReminder {
    pub note_id: NoteId,
    pub triggered_t: Millis,
    pub cooldown_until: Millis,
}

/// Element bounds in canvas units.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "shape", rename_all = "snake_case")]
pub enum Bounds {
    Rect { min_x: f64, min_y: f64, max_x: f64, max_y: f64 },
    Box { min_x: f64, min_y: f64, min_z: f64, max_x: f64, max_y: f64, max_z: f64 },
}

impl Bounds {
    pub fn rect(min_x: f64, min_y: f64, max_x: f64, max_y: f64) -> Self {
        Bounds::Rect { min_x, min_y, max_x, max_y }
    }

    pub fn is_degenerate(&self) -> bool {
        match *self {
            Bounds::Rect { min_x, min_y, max_x, max_y } => !(max_x > min_x && max_y > min_y),
            Bounds::Box { min_x, min_y, min_z, max_x, max_y, max_z } => {
                !(max_x > min_x && max_y > min_y && max_z > min_z)
            }
        }
    }

    /// Closed-interval containment. 2D bounds ignore depth; 3D bounds need it.
    pub fn contains(&self, sample: &PointerSample) -> bool {
        match *self {
            Bounds::Rect { min_x, min_y, max_x, max_y } => {
                sample.view == View::TwoD && (min_x..=max_x).contains(&sample.x) && (min_y..=max_y).contains(&sample.y)
            }
            Bounds::Box { min_x, min_y, min_z, max_x, max_y, max_z } => match sample.z {
                Some(z) => {
                    (min_x..=max_x).contains(&sample.x)
                        && (min_y..=max_y).contains(&sample.y)
                        && (min_z..=max_z).contains(&z)
                }
                None => false,
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SceneElement {
    pub id: String,
    pub name: String,
    pub bounds: Bounds,
}

impl SceneElement {
    pub fn validate(&self) -> Result<(), ModelError> {
        if self.id.is_empty() {
            return Err(ModelError::EmptyElementId);
        }
        if self.bounds.is_degenerate() {
            return Err(ModelError::DegenerateBounds(self.id.clone()));
        }
        Ok(())
    }
}
