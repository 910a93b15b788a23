//! Turning promoted segments into anchored, enriched notes.

use std::collections::BTreeSet;
use std::time::Duration;

use image::{Rgba, RgbaImage};
use serde::{Deserialize, Serialize};

use crate::chunker::PromotedSegment;
use crate::model::{
    ActionSuggestion, AnchorConfidence, AnchorPoint, Bounds, EnrichmentState, Millis, NoteId, PointerSample,
    PointerTrace, ProcessLabel, SceneElement, TalkNote, View, MAX_ACTIONS,
};
use crate::oracle::{rule_links, ElementLinkRequest, SemanticOracle};
use crate::text;
use crate::trace::{self, dwell_centroid, TraceStore};

/// Length of the fallback summary of a note whose enrichment failed.
pub const FALLBACK_SUMMARY_CHARS: usize = 80;

/// Notes further apart than this are never checked for merging.
pub const MERGE_WINDOW_MS: Millis = 60_000;

/// Where anchors go when there is nothing better.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AnchorContext {
    pub canvas_center: (f64, f64),
    pub view: View,
    /// Last pointer sample before the note's window, if any.
    pub last_known: Option<PointerSample>,
}

/// Dwell-weighted centroid of the samples in `view`; otherwise the last known
/// pointer position; otherwise the canvas center.
pub fn compute_anchor(slice: &PointerTrace, window: (Millis, Millis), ctx: &AnchorContext) -> AnchorPoint {
    let in_view: Vec<PointerSample> = slice.samples.iter().filter(|s| s.view == ctx.view).copied().collect();
    if let Some(c) = dwell_centroid(&in_view, window.1) {
        return AnchorPoint { x: c.x, y: c.y, z: c.z, view: ctx.view, confidence: AnchorConfidence::FromTrace };
    }
    if let Some(last) = ctx.last_known.or_else(|| slice.samples.last().copied()) {
        return AnchorPoint {
            x: last.x,
            y: last.y,
            z: last.z,
            view: last.view,
            confidence: AnchorConfidence::LastKnown,
        };
    }
    let (x, y) = ctx.canvas_center;
    AnchorPoint { x, y, z: None, view: ctx.view, confidence: AnchorConfidence::Fallback }
}

/// Builds a pending note for `segment` with its trace slice and anchor.
pub fn create_note(
    id: NoteId,
    segment: &PromotedSegment,
    store: &TraceStore,
    view: View,
    canvas_center: (f64, f64),
) -> TalkNote {
    let t_start = segment.t_start();
    // zero-length fragments still give a non-empty window
    let t_end = segment.t_end().max(t_start + 1);
    let trace = store.slice(t_start, t_end);
    let ctx = AnchorContext { canvas_center, view, last_known: store.last_before(t_start) };
    let anchor = compute_anchor(&trace, (t_start, t_end), &ctx);
    TalkNote {
        id,
        transcript: segment.text(),
        t_start,
        t_end,
        summary: None,
        labels: BTreeSet::new(),
        actions: Vec::new(),
        anchor,
        trace,
        linked_elements: BTreeSet::new(),
        thread_id: None,
        merged_from: Vec::new(),
        enrichment_state: EnrichmentState::Pending,
        utterances: segment.utterances.clone(),
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RetryPolicy {
    /// Delay before each retry; its length is the number of retries.
    pub backoff: Vec<Duration>,
}

impl Default for RetryPolicy {
    fn default() -> Self {
        Self { backoff: vec![Duration::from_secs(1), Duration::from_secs(2)] }
    }
}

/// Result of one enrichment run, applied to a note with [`Enrichment::apply`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Enrichment {
    pub summary: String,
    pub labels: BTreeSet<ProcessLabel>,
    pub actions: Vec<ActionSuggestion>,
    pub state: EnrichmentState,
}

impl Enrichment {
    pub fn failed(transcript: &str) -> Self {
        Self {
            summary: text::truncate_chars(transcript, FALLBACK_SUMMARY_CHARS),
            labels: BTreeSet::from([ProcessLabel::Process]),
            actions: Vec::new(),
            state: EnrichmentState::Failed,
        }
    }

    pub fn apply(&self, note: &mut TalkNote) {
        note.summary = Some(self.summary.clone());
        note.labels = self.labels.clone();
        note.actions = self.actions.clone();
        note.enrichment_state = self.state;
    }
}

/// Summarizes, labels and suggests actions for `transcript`. Summary and
/// labels are retried per `policy`; when they keep failing the result is the
/// `Failed` degradation. `sleep` receives each backoff delay.
pub fn enrich_transcript(
    transcript: &str,
    oracle: &dyn SemanticOracle,
    policy: &RetryPolicy,
    sleep: &mut dyn FnMut(Duration),
) -> Enrichment {
    let mut attempt = 0;
    loop {
        let core = oracle.summarize(transcript).and_then(|s| Ok((s, oracle.classify_labels(transcript)?)));
        match core {
            Ok((summary, labels)) if !labels.is_empty() => {
                let mut actions = oracle.suggest_actions(transcript, &labels).unwrap_or_default();
                actions.truncate(MAX_ACTIONS);
                return Enrichment { summary, labels, actions, state: EnrichmentState::Enriched };
            }
            _ => {}
        }
        match policy.backoff.get(attempt) {
            Some(delay) => {
                sleep(*delay);
                attempt += 1;
            }
            None => return Enrichment::failed(transcript),
        }
    }
}

/// Enriches a pending note. Notes in any other state are returned unchanged.
pub fn enrich(mut note: TalkNote, oracle: &dyn SemanticOracle, policy: &RetryPolicy) -> TalkNote {
    if note.enrichment_state != EnrichmentState::Pending {
        return note;
    }
    enrich_transcript(&note.transcript, oracle, policy, &mut std::thread::sleep).apply(&mut note);
    note
}

#[derive(Debug, Clone, PartialEq)]
#[allow(clippy::large_enum_variant)]
pub enum MergeOutcome {
    Merged(TalkNote),
    Separate,
}

/// Folds `new` into `prev` when the oracle says it resumes the same thought.
/// The merged note keeps `prev`'s id and thread and is pending again.
pub fn try_merge(
    prev: &TalkNote,
    new: &TalkNote,
    oracle: &dyn SemanticOracle,
    ctx: &AnchorContext,
    window_ms: Millis,
) -> MergeOutcome {
    if new.t_start.saturating_sub(prev.t_end) > window_ms || new.t_start < prev.t_start {
        return MergeOutcome::Separate;
    }
    if !oracle.merge_check(&prev.transcript, &new.transcript).unwrap_or(false) {
        return MergeOutcome::Separate;
    }
    MergeOutcome::Merged(merge_notes(prev, new, ctx))
}

pub fn merge_notes(prev: &TalkNote, new: &TalkNote, ctx: &AnchorContext) -> TalkNote {
    let t_start = prev.t_start.min(new.t_start);
    let t_end = prev.t_end.max(new.t_end);
    let trace = prev.trace.concat(&new.trace);
    let anchor = compute_anchor(&trace, (t_start, t_end), ctx);
    let mut merged_from = prev.merged_from.clone();
    merged_from.push(new.id);
    merged_from.extend(new.merged_from.iter().copied());
    let mut utterances = prev.utterances.clone();
    utterances.extend(new.utterances.iter().cloned());
    TalkNote {
        id: prev.id,
        transcript: text::join_spaced([prev.transcript.as_str(), new.transcript.as_str()]),
        t_start,
        t_end,
        summary: None,
        labels: BTreeSet::new(),
        actions: Vec::new(),
        anchor,
        trace,
        linked_elements: prev.linked_elements.union(&new.linked_elements).cloned().collect(),
        thread_id: prev.thread_id,
        merged_from,
        enrichment_state: EnrichmentState::Pending,
        utterances,
    }
}

/// Links scene elements through the oracle, falling back to name mentions
/// and pointer containment.
pub fn link_elements(
    note: &TalkNote,
    scene: &[SceneElement],
    oracle: &dyn SemanticOracle,
    containment: f64,
    image: Option<&[u8]>,
) -> BTreeSet<String> {
    if scene.is_empty() {
        return BTreeSet::new();
    }
    let overlay = trace::render_overlay(&note.trace, &note.utterances);
    let request = ElementLinkRequest {
        transcript: &note.transcript,
        trace: &note.trace,
        overlay: &overlay,
        scene,
        image_png: image,
    };
    oracle
        .element_link(&request)
        .unwrap_or_else(|_| rule_links(&text::words(&note.transcript), &note.trace, scene, containment))
}

/// Draws scene outlines and the note's markers onto a blank canvas, for
/// oracles that link elements from an image.
pub fn overlay_png(note: &TalkNote, scene: &[SceneElement], canvas: (f64, f64)) -> Option<Vec<u8>> {
    let scale = (1024.0 / canvas.0.max(canvas.1)).min(1.0);
    let w = (canvas.0 * scale).round().max(1.0) as u32;
    let h = (canvas.1 * scale).round().max(1.0) as u32;
    let mut snap = RgbaImage::from_pixel(w, h, Rgba([255, 255, 255, 255]));
    let grey = Rgba([90, 90, 90, 255]);
    for el in scene {
        if let Bounds::Rect { min_x, min_y, max_x, max_y } = el.bounds {
            let (x0, y0) = ((min_x * scale) as i64, (min_y * scale) as i64);
            let (x1, y1) = ((max_x * scale) as i64, (max_y * scale) as i64);
            let mut put = |x: i64, y: i64| {
                if (0..w as i64).contains(&x) && (0..h as i64).contains(&y) {
                    snap.put_pixel(x as u32, y as u32, grey);
                }
            };
            for x in x0..=x1 {
                put(x, y0);
                put(x, y1);
            }
            for y in y0..=y1 {
                put(x0, y);
                put(x1, y);
            }
        }
    }
    let overlay = trace::render_overlay(&note.trace, &note.utterances);
    trace::encode_png(&trace::rasterize(&overlay, &snap, canvas)).ok()
}
