//! Server frames pushed over the live stream.
//!
//! Frames are projections of log events and carry the `seq` of the event
//! they came from. `error` frames answer a single connection and have no seq.

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use thinkaloud_core::event::{EventBody, SessionEvent};
use thinkaloud_core::{Millis, Mode};

/// Words of the partial stream shown next to the pointer.
pub const TALKTEXT_WORDS: usize = 6;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Frame {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seq: Option<u64>,
    pub t: Millis,
    pub kind: String,
    pub payload: Value,
}

impl Frame {
    pub fn error(t: Millis, message: impl Into<String>) -> Self {
        Frame { seq: None, t, kind: "error".into(), payload: json!({ "message": message.into() }) }
    }

    fn of(ev: &SessionEvent, kind: &str, payload: Value) -> Self {
        Frame { seq: Some(ev.seq), t: ev.t, kind: kind.into(), payload }
    }
}

fn tail_words(text: &str, n: usize) -> String {
    let words: Vec<&str> = text.split_whitespace().collect();
    words[words.len().saturating_sub(n)..].join(" ")
}

fn payload(body: &EventBody) -> Value {
    match serde_json::to_value(body) {
        Ok(Value::Object(mut m)) => m.remove("payload").unwrap_or(Value::Null),
        _ => Value::Null,
    }
}

/// Frames a client sees for one log event. Input echoes other than
/// fragments produce nothing.
pub fn project(ev: &SessionEvent, mode: Mode) -> Vec<Frame> {
    match &ev.body {
        EventBody::FragmentIn(frag) => {
            let mut out = vec![Frame::of(
                ev,
                "talktext",
                json!({ "text": tail_words(&frag.text, TALKTEXT_WORDS), "is_final": frag.is_final }),
            )];
            if frag.is_final && mode == Mode::Full {
                out.push(Frame::of(ev, "talkviz", json!({ "signal": "boundary" })));
            }
            out
        }
        EventBody::NoteCreated { .. } => vec![
            Frame::of(ev, "talkviz", json!({ "signal": "chunking" })),
            Frame::of(ev, ev.body.kind(), payload(&ev.body)),
        ],
        EventBody::ThreadAssigned { note_id, thread, created } => {
            vec![Frame::of(ev, "thread_updated", json!({ "thread": thread, "note_id": note_id, "created": created }))]
        }
        EventBody::NoteEnriched { .. }
        | EventBody::NoteMerged { .. }
        | EventBody::TipShown { .. }
        | EventBody::TipDismissed { .. }
        | EventBody::ReminderShown { .. }
        | EventBody::ReminderHidden { .. } => vec![Frame::of(ev, ev.body.kind(), payload(&ev.body))],
        _ => Vec::new(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use thinkaloud_core::{NoteId, TranscriptFragment};

    fn ev(body: EventBody) -> SessionEvent {
        SessionEvent { seq: 5, t: 1200, body }
    }

    #[test]
    fn partial_shows_last_six_words() {
        let e = ev(EventBody::FragmentIn(TranscriptFragment::partial("I want to move the wall here", 0, 900)));
        let frames = project(&e, Mode::Full);
        assert_eq!(frames.len(), 1);
        assert_eq!(frames[0].payload["text"], "want to move the wall here");
        assert_eq!(frames[0].seq, Some(5));
    }

    #[test]
    fn final_fragment_pulses_only_in_full_mode() {
        let e = ev(EventBody::FragmentIn(TranscriptFragment::final_text("hello there", 0, 900)));
        let kinds = |m| project(&e, m).into_iter().map(|f| f.kind).collect::<Vec<_>>();
        assert_eq!(kinds(Mode::Full), ["talktext", "talkviz"]);
        assert_eq!(kinds(Mode::Baseline), ["talktext"]);
    }

    #[test]
    fn pass_through_keeps_payload() {
        let e = ev(EventBody::ReminderHidden { note_id: NoteId(3) });
        let frames = project(&e, Mode::Full);
        assert_eq!(
            serde_json::to_string(&frames[0]).unwrap(),
            r#"{"seq":5,"t":1200,"kind":"reminder_hidden","payload":{"note_id":3}}"#
        );
        assert!(project(&ev(EventBody::NoteChecked { id: NoteId(3) }), Mode::Full).is_empty());
        let err = serde_json::to_value(Frame::error(7, "bad")).unwrap();
        assert!(err.get("seq").is_none());
    }
}
