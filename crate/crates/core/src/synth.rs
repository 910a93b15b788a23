//! Seeded synthetic sessions.
//!
//! A scripted speaker walks a small floor plan, talking about one area at a
//! time. Topics use disjoint vocabularies, so coming back to the previous
//! topic after a pause produces a note that merges, and switching topics
//! produces a new one. The driver reacts to the engine (acknowledging tips,
//! checking live notes) so the resulting log exercises every event kind.

use std::sync::Arc;

use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::chunker::PromotionCause;
use crate::config::{Canvas, Mode, SessionConfig};
use crate::engine::{ClientMessage, Engine, JobMode};
use crate::event::{EventBody, SessionEvent};
use crate::model::{
    Bounds, Millis, NoteId, PointerSample, ProcessLabel, SceneElement, TalkNote, TalkTip, TipCategory, TipId,
    TranscriptFragment, View,
};
use crate::oracle::RuleOracle;

struct Topic {
    element: &'static str,
    name: &'static str,
    rect: (f64, f64, f64, f64),
    words: [&'static str; 6],
}

const TOPICS: [Topic; 8] = [
    Topic {
        element: "kitchen",
        name: "Kitchen",
        rect: (40.0, 40.0, 340.0, 300.0),
        words: ["kitchen", "counter", "sink", "island", "pantry", "cooking"],
    },
    Topic {
        element: "bedroom",
        name: "Bedroom",
        rect: (380.0, 40.0, 660.0, 300.0),
        words: ["bedroom", "bed", "closet", "wardrobe", "quiet", "sleeping"],
    },
    Topic {
        element: "bathroom",
        name: "Bathroom",
        rect: (700.0, 40.0, 960.0, 260.0),
        words: ["bathroom", "shower", "tiles", "mirror", "vanity", "towel"],
    },
    Topic {
        element: "window",
        name: "Window",
        rect: (40.0, 320.0, 300.0, 400.0),
        words: ["window", "sunlight", "view", "frame", "glass", "facing"],
    },
    Topic {
        element: "stairs",
        name: "Stairs",
        rect: (330.0, 330.0, 520.0, 560.0),
        words: ["stairs", "steps", "railing", "landing", "climb", "steep"],
    },
    Topic {
        element: "garden",
        name: "Garden",
        rect: (560.0, 320.0, 960.0, 560.0),
        words: ["garden", "trees", "patio", "lawn", "plants", "shade"],
    },
    Topic {
        element: "entrance",
        name: "Entrance",
        rect: (40.0, 600.0, 400.0, 760.0),
        words: ["entrance", "door", "hallway", "coats", "welcome", "threshold"],
    },
    Topic {
        element: "storage",
        name: "Storage",
        rect: (440.0, 600.0, 960.0, 760.0),
        words: ["storage", "shelves", "boxes", "cabinet", "tools", "bikes"],
    },
];

const FILLERS: [&str; 12] = ["the", "and", "with", "um", "i", "this", "is", "so", "just", "uh", "that", "a"];

/// Extra words that give notes a label.
const LABEL_TAILS: [&str; 5] = ["is a problem", "is important", "later", "which i want", "remember"];

#[derive(Debug, Clone, PartialEq)]
pub struct SynthSpec {
    pub seed: u64,
    pub duration_ms: Millis,
    pub mode: Mode,
    /// Probability that an episode continues the previous topic.
    pub p_resume: f64,
    /// Probability that a topic switch is announced instead of paused into.
    pub p_marker: f64,
    /// Expected note checks per minute.
    pub checks_per_min: f64,
    pub p_ack: f64,
    /// Switch to the 3D view halfway through.
    pub switch_view: bool,
}

impl SynthSpec {
    pub fn think_aloud(seed: u64, duration_ms: Millis) -> Self {
        Self {
            seed,
            duration_ms,
            mode: Mode::Full,
            p_resume: 0.56,
            p_marker: 0.25,
            checks_per_min: 0.3,
            p_ack: 0.3,
            switch_view: true,
        }
    }

    pub fn baseline(seed: u64, duration_ms: Millis) -> Self {
        Self { mode: Mode::Baseline, switch_view: false, ..Self::think_aloud(seed, duration_ms) }
    }
}

pub fn floor_plan() -> Vec<SceneElement> {
    TOPICS
        .iter()
        .map(|t| SceneElement {
            id: t.element.into(),
            name: t.name.into(),
            bounds: Bounds::Rect { min_x: t.rect.0, min_y: t.rect.1, max_x: t.rect.2, max_y: t.rect.3 },
        })
        .collect()
}

pub fn synth_config(mode: Mode) -> SessionConfig {
    let mut cfg = SessionConfig::new(mode, Canvas { width: 1000.0, height: 800.0 });
    cfg.brief = "Redesign the ground floor of a family house.".into();
    cfg.scene = floor_plan();
    cfg
}

struct Driver {
    rng: ChaCha8Rng,
    engine: Engine,
    spec: SynthSpec,
    now: Millis,
    view: View,
}

impl Driver {
    fn send(&mut self, msg: ClientMessage, at: Millis) {
        self.now = self.now.max(at);
        // the driver only produces valid input
        self.engine.handle(msg, self.now).expect("scripted input is valid");
    }

    fn sentence(&mut self, topic: &Topic, extra: Option<&str>) -> String {
        let mut words: Vec<&str> = topic.words.choose_multiple(&mut self.rng, 5).copied().collect();
        words.sort_by_key(|w| topic.words.iter().position(|x| x == w));
        let mut out: Vec<&str> = Vec::new();
        for w in words {
            if self.rng.random_bool(0.6) {
                out.push(FILLERS.choose(&mut self.rng).copied().unwrap_or("the"));
            }
            out.push(w);
        }
        let mut s = out.join(" ");
        if let Some(e) = extra {
            s.push(' ');
            s.push_str(e);
        }
        s
    }

    fn pointer_over(&mut self, topic: &Topic, t0: Millis, t1: Millis) {
        let (x0, y0, x1, y1) = topic.rect;
        let (cx, cy) = ((x0 + x1) / 2.0, (y0 + y1) / 2.0);
        let mut t = t0;
        while t <= t1 {
            let x = (cx + self.rng.random_range(-40.0..40.0)).round();
            let y = (cy + self.rng.random_range(-30.0..30.0)).round();
            let sample = match self.view {
                View::TwoD => PointerSample::new_2d(x, y, t),
                View::ThreeD => PointerSample::new_3d(x, y, self.rng.random_range(0..40) as f64, t),
            };
            self.send(ClientMessage::Pointer(sample), t);
            t += 250;
        }
    }

    /// Speaks one utterance starting at `t`; returns its end.
    fn utter(&mut self, topic: &Topic, text: String, t: Millis) -> Millis {
        let n = text.split_whitespace().count() as Millis;
        let t_end = t + 300 * n.max(2);
        let half: Vec<&str> = text.split_whitespace().take((n as usize).div_ceil(2)).collect();
        let partial = TranscriptFragment::partial(half.join(" "), t, t + 300);
        self.pointer_over(topic, t, t + 250);
        self.send(ClientMessage::Fragment(partial), t + 300);
        self.pointer_over(topic, t + 500, t_end);
        self.send(ClientMessage::Fragment(TranscriptFragment::final_text(text, t, t_end)), t_end + 200);
        t_end
    }

    fn live_notes(&self) -> Vec<&TalkNote> {
        self.engine.notes().values().collect()
    }

    fn run(mut self) -> Vec<SessionEvent> {
        let mut t: Millis = 1500;
        let mut current = self.rng.random_range(0..TOPICS.len());
        let mut first = true;
        let (mut resume, mut marker) = (false, false);
        let mut acked: Option<TipId> = None;
        let mut filtered = false;
        while t + 20_000 < self.spec.duration_ms {
            if self.spec.switch_view && self.view == View::TwoD && t > self.spec.duration_ms / 2 {
                self.view = View::ThreeD;
                self.send(ClientMessage::ViewChange { view: View::ThreeD }, t);
            }
            if !resume && !first {
                let mut next = self.rng.random_range(0..TOPICS.len() - 1);
                if next >= current {
                    next += 1;
                }
                current = next;
            }
            first = false;
            let topic = &TOPICS[current];

            let fragments = self.rng.random_range(1..=2);
            for i in 0..fragments {
                let tail = if self.rng.random_bool(0.3) { LABEL_TAILS.choose(&mut self.rng).copied() } else { None };
                let mut text = self.sentence(topic, tail);
                if marker && i == 0 {
                    text = format!("okay {text}");
                } else if self.rng.random_bool(0.1) {
                    text = format!("why {text}?");
                }
                t = self.utter(topic, text, t) + self.rng.random_range(700..1800);
            }

            // react to what the engine surfaced
            if let Some(tip) = self.engine.tips().visible() {
                if acked != Some(tip) && self.rng.random_bool(self.spec.p_ack) {
                    acked = Some(tip);
                    self.send(ClientMessage::TipAck { id: tip }, t);
                }
            }
            if self.rng.random_bool((self.spec.checks_per_min / 4.0).min(1.0)) {
                let ids: Vec<NoteId> = self.live_notes().iter().map(|n| n.id).collect();
                if let Some(id) = ids.choose(&mut self.rng).copied() {
                    self.send(ClientMessage::NoteChecked { id }, t);
                }
            }
            if !filtered && t > self.spec.duration_ms * 2 / 3 {
                filtered = true;
                let labels = [ProcessLabel::Problem, ProcessLabel::Question].into_iter().collect();
                self.send(ClientMessage::Filter { labels }, t);
            }

            // an announced topic switch needs no pause; anything else does
            resume = self.rng.random_bool(self.spec.p_resume);
            marker = !resume && self.rng.random_bool(self.spec.p_marker);
            t += if marker {
                0
            } else if self.rng.random_bool(0.1) {
                self.rng.random_range(13_000..16_000)
            } else {
                self.rng.random_range(9_000..13_000)
            };
        }
        let end = self.spec.duration_ms.max(self.now);
        self.engine.advance(end);
        self.engine.end(end);
        self.engine.log().to_vec()
    }
}

/// Runs a synthetic session through the rule-based oracle and returns its log.
pub fn generate(spec: &SynthSpec) -> Vec<SessionEvent> {
    let engine = Engine::new(synth_config(spec.mode), Arc::new(RuleOracle::default()), JobMode::Inline)
        .expect("synthetic config is valid");
    let driver =
        Driver { rng: ChaCha8Rng::seed_from_u64(spec.seed), engine, spec: spec.clone(), now: 0, view: View::TwoD };
    driver.run()
}

/// Target event counts for [`counts_log`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EventCounts {
    pub duration: Millis,
    pub created: usize,
    pub merged: usize,
    pub checked: usize,
    pub tips_shown: usize,
    pub tip_responses: usize,
    pub reminders: usize,
    pub filters: usize,
}

/// A log with exactly the given event counts, spread evenly over the
/// duration. Not an engine transcript: it feeds the analyzer only.
pub fn counts_log(c: &EventCounts) -> Vec<SessionEvent> {
    use crate::model::{AnchorConfidence, AnchorPoint, EnrichmentState, PointerTrace, TalkReminder};
    let note = |id: u64, t: Millis| TalkNote {
        id: NoteId(id),
        transcript: format!("note {id}"),
        t_start: t,
        t_end: t + 1,
        summary: None,
        labels: Default::default(),
        actions: vec![],
        anchor: AnchorPoint { x: 0.0, y: 0.0, z: None, view: View::TwoD, confidence: AnchorConfidence::Fallback },
        trace: PointerTrace::default(),
        linked_elements: Default::default(),
        thread_id: None,
        merged_from: vec![],
        enrichment_state: EnrichmentState::Pending,
        utterances: vec![],
    };
    let mut bodies: Vec<EventBody> = vec![EventBody::Config(synth_config(Mode::Full))];
    for i in 1..=c.created as u64 {
        bodies.push(EventBody::NoteCreated { note: note(i, 0), cause: PromotionCause::Pause });
    }
    for i in 0..c.merged as u64 {
        let m = note(2 * i + 1, 0);
        bodies.push(EventBody::NoteMerged { into: NoteId(2 * i + 1), from: NoteId(2 * i + 2), note: m });
    }
    for i in 0..c.checked as u64 {
        bodies.push(EventBody::NoteChecked { id: NoteId(i + 1) });
    }
    for i in 1..=c.tips_shown as u64 {
        let tip = TalkTip {
            id: TipId(i),
            category: TipCategory::ProbingQuestion,
            text: "What are you weighing?".into(),
            created_t: 0,
            shown_t: Some(0),
            responded: i <= c.tip_responses as u64,
        };
        bodies.push(EventBody::TipShown { tip, nudge: false });
    }
    for i in 1..=c.tip_responses as u64 {
        bodies.push(EventBody::TipResponse { tip_id: TipId(i), note_id: NoteId(i), explicit: false });
    }
    for i in 0..c.reminders as u64 {
        let reminder = TalkReminder { note_id: NoteId(i + 1), triggered_t: 0, cooldown_until: 120_000 };
        bodies.push(EventBody::ReminderShown { reminder, summary: None });
    }
    for _ in 0..c.filters {
        bodies.push(EventBody::FilterApplied { labels: Default::default() });
    }
    bodies.push(EventBody::SessionEnd {});
    let n = bodies.len() as u64;
    bodies
        .into_iter()
        .enumerate()
        .map(|(i, body)| {
            let i = i as u64;
            let t = if n > 1 { c.duration * i / (n - 1) } else { 0 };
            SessionEvent { seq: i + 1, t, body }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analyzer::session_stats;

    #[test]
    fn same_seed_same_log() {
        let spec = SynthSpec::think_aloud(3, 120_000);
        assert_eq!(generate(&spec), generate(&spec));
    }

    #[test]
    fn counts_log_has_requested_counts() {
        let c = EventCounts {
            duration: 900_000,
            created: 5,
            merged: 2,
            checked: 1,
            tips_shown: 3,
            tip_responses: 2,
            reminders: 4,
            filters: 1,
        };
        let s = session_stats(&counts_log(&c));
        assert_eq!(
            (s.duration, s.notes_created, s.notes_merged, s.notes_checked, s.tips_shown, s.tip_responses),
            (900_000, 5, 2, 1, 3, 2)
        );
        assert_eq!((s.reminders_shown, s.filter_applications), (4, 1));
    }
}
