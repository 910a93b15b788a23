#![allow(dead_code)]

use std::sync::Arc;

use proptest::prelude::*;
use thinkaloud_core::{
    ClientMessage, Engine, JobMode, Millis, Mode, PointerSample, RuleOracle, SessionConfig, TranscriptFragment,
};

pub const VOCAB: [&[&str]; 5] = [
    &["kitchen", "counter", "sink", "island", "pantry"],
    &["window", "glare", "sunlight", "frame", "glass"],
    &["stairs", "railing", "landing", "steps", "climb"],
    &["garden", "patio", "lawn", "trees", "shade"],
    &["wall", "corridor", "door", "entrance", "noise"],
];

pub const FILLERS: [&str; 6] = ["the", "and", "um", "so", "okay", "just"];

/// One spoken utterance: topic, word picks, duration, and the silence before it.
#[derive(Debug, Clone)]
pub struct Utter {
    pub topic: usize,
    pub picks: Vec<usize>,
    pub silence: Millis,
    pub partial: bool,
    pub pointer: (f64, f64),
    pub ack: bool,
    pub check: Option<usize>,
}

pub fn utter() -> impl Strategy<Value = Utter> {
    (
        0..VOCAB.len(),
        prop::collection::vec(0usize..8, 1..7),
        prop_oneof![0u64..3_000, 7_000u64..9_000, 9_000u64..20_000],
        any::<bool>(),
        (0.0f64..1000.0, 0.0f64..800.0),
        prop::bool::weighted(0.2),
        prop::option::weighted(0.1, 0usize..50),
    )
        .prop_map(|(topic, picks, silence, partial, pointer, ack, check)| Utter {
            topic,
            picks,
            silence,
            partial,
            pointer,
            ack,
            check,
        })
}

pub fn words_of(u: &Utter) -> String {
    let vocab = VOCAB[u.topic];
    u.picks
        .iter()
        .map(|&i| if i < vocab.len() { vocab[i] } else { FILLERS[i % FILLERS.len()] })
        .collect::<Vec<_>>()
        .join(" ")
}

pub fn config(mode: Mode) -> SessionConfig {
    let mut cfg = thinkaloud_core::synth::synth_config(mode);
    cfg.brief = "test".into();
    cfg
}

/// Feeds a scripted session into a fresh inline engine. Inputs the engine
/// rejects are skipped, as a live host would answer them with an error frame.
pub fn run_session(mode: Mode, script: &[Utter]) -> Engine {
    let mut e = Engine::new(config(mode), Arc::new(RuleOracle::default()), JobMode::Inline).unwrap();
    let mut t: Millis = 500;
    for u in script {
        t += u.silence;
        let text = words_of(u);
        let t_end = t + 250 * u.picks.len() as Millis;
        if u.partial {
            let _ = e.handle(ClientMessage::Fragment(TranscriptFragment::partial("…", t, t + 300)), t + 300);
        }
        let _ = e.handle(ClientMessage::Pointer(PointerSample::new_2d(u.pointer.0, u.pointer.1, t + 100)), t + 300);
        let _ = e.handle(ClientMessage::Fragment(TranscriptFragment::final_text(text, t, t_end)), t_end + 150);
        if u.ack {
            if let Some(tip) = e.tips().visible() {
                let _ = e.handle(ClientMessage::TipAck { id: tip }, t_end + 200);
            }
        }
        if let Some(k) = u.check {
            let ids: Vec<_> = e.notes().keys().copied().collect();
            if !ids.is_empty() {
                let _ = e.handle(ClientMessage::NoteChecked { id: ids[k % ids.len()] }, t_end + 250);
            }
        }
        t = t_end + 250;
    }
    e.advance(t + 30_000);
    e.end(t + 30_000);
    e
}
