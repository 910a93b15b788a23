//! The append-only session log and its JSONL encoding.
//!
//! One event per line, `{"seq":..,"t":..,"kind":..,"payload":{..}}`. Input
//! events record what the engine was fed; the rest record what it decided.
//! Replaying the inputs through a deterministic engine regenerates the file
//! byte for byte.

use std::collections::BTreeSet;
use std::fs::{File, OpenOptions};
use std::io::{self, BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::chunker::PromotionCause;
use crate::config::SessionConfig;
use crate::error::LogError;
use crate::model::{
    Millis, NoteId, PointerSample, ProcessLabel, TalkNote, TalkReminder, TalkThread, TalkTip, TipId,
    TranscriptFragment, View,
};
use crate::notes::Enrichment;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionEvent {
    pub seq: u64,
    pub t: Millis,
    #[serde(flatten)]
    pub body: EventBody,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "payload", rename_all = "snake_case")]
pub enum EventBody {
    Config(SessionConfig),
    FragmentIn(TranscriptFragment),
    PointerIn(PointerSample),
    ViewChange { view: View },
    NoteChecked { id: NoteId },
    TipAck { id: TipId },
    FilterApplied { labels: BTreeSet<ProcessLabel> },
    SessionEnd {},
    NoteCreated { note: TalkNote, cause: PromotionCause },
    NoteEnriched { id: NoteId, enrichment: Enrichment, linked_elements: BTreeSet<String> },
    NoteMerged { into: NoteId, from: NoteId, note: TalkNote },
    ThreadAssigned { note_id: NoteId, thread: TalkThread, created: bool },
    TipCandidates { tips: Vec<TalkTip> },
    TipShown { tip: TalkTip, nudge: bool },
    TipDismissed { id: TipId },
    TipResponse { tip_id: TipId, note_id: NoteId, explicit: bool },
    ReminderShown { reminder: TalkReminder, summary: Option<String> },
    ReminderHidden { note_id: NoteId },
}

impl EventBody {
    pub fn kind(&self) -> &'static str {
        match self {
            EventBody::Config(_) => "config",
            EventBody::FragmentIn(_) => "fragment_in",
            EventBody::PointerIn(_) => "pointer_in",
            EventBody::ViewChange { .. } => "view_change",
            EventBody::NoteChecked { .. } => "note_checked",
            EventBody::TipAck { .. } => "tip_ack",
            EventBody::FilterApplied { .. } => "filter_applied",
            EventBody::SessionEnd {} => "session_end",
            EventBody::NoteCreated { .. } => "note_created",
            EventBody::NoteEnriched { .. } => "note_enriched",
            EventBody::NoteMerged { .. } => "note_merged",
            EventBody::ThreadAssigned { .. } => "thread_assigned",
            EventBody::TipCandidates { .. } => "tip_candidates",
            EventBody::TipShown { .. } => "tip_shown",
            EventBody::TipDismissed { .. } => "tip_dismissed",
            EventBody::TipResponse { .. } => "tip_response",
            EventBody::ReminderShown { .. } => "reminder_shown",
            EventBody::ReminderHidden { .. } => "reminder_hidden",
        }
    }

    /// Whether the event records something fed into the engine.
    pub fn is_input(&self) -> bool {
        matches!(
            self,
            EventBody::Config(_)
                | EventBody::FragmentIn(_)
                | EventBody::PointerIn(_)
                | EventBody::ViewChange { .. }
                | EventBody::NoteChecked { .. }
                | EventBody::TipAck { .. }
                | EventBody::FilterApplied { .. }
                | EventBody::SessionEnd {}
        )
    }
}

pub fn to_line(event: &SessionEvent) -> String {
    serde_json::to_string(event).expect("session events always serialize")
}

/// Serializes events as JSONL, every line newline-terminated.
pub fn to_jsonl(events: &[SessionEvent]) -> String {
    let mut out = String::new();
    for e in events {
        out.push_str(&to_line(e));
        out.push('\n');
    }
    out
}

/// Parses a JSONL log. Line numbers in errors are 1-based. `seq` must
/// strictly increase.
pub fn parse_jsonl(src: &str) -> Result<Vec<SessionEvent>, LogError> {
    read_log(src.as_bytes())
}

pub fn read_log<R: io::Read>(reader: R) -> Result<Vec<SessionEvent>, LogError> {
    let mut events: Vec<SessionEvent> = Vec::new();
    let mut reader = BufReader::new(reader);
    let mut line = String::new();
    let mut lineno = 0;
    loop {
        line.clear();
        let n = reader.read_line(&mut line)?;
        if n == 0 {
            break;
        }
        lineno += 1;
        if !line.ends_with('\n') {
            return Err(LogError::Corrupt { line: lineno, message: "truncated line (missing newline)".into() });
        }
        let event: SessionEvent = serde_json::from_str(line.trim_end_matches(['\n', '\r']))
            .map_err(|e| LogError::Corrupt { line: lineno, message: e.to_string() })?;
        if let Some(prev) = events.last() {
            if event.seq <= prev.seq {
                return Err(LogError::Corrupt {
                    line: lineno,
                    message: format!("seq {} does not follow {}", event.seq, prev.seq),
                });
            }
        }
        events.push(event);
    }
    Ok(events)
}

pub fn read_log_file(path: &Path) -> Result<Vec<SessionEvent>, LogError> {
    read_log(File::open(path)?)
}

/// Appends events to a `<session-id>.events.jsonl` file, flushing each line.
pub struct LogWriter {
    out: BufWriter<File>,
}

impl LogWriter {
    pub fn create(path: &Path) -> io::Result<Self> {
        let file = OpenOptions::new().create(true).append(true).open(path)?;
        Ok(Self { out: BufWriter::new(file) })
    }

    pub fn append(&mut self, event: &SessionEvent) -> io::Result<()> {
        self.out.write_all(to_line(event).as_bytes())?;
        self.out.write_all(b"\n")?;
        self.out.flush()
    }
}

pub fn log_file_name(session_id: &str) -> String {
    format!("{session_id}.events.jsonl")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ev(seq: u64, body: EventBody) -> SessionEvent {
        SessionEvent { seq, t: seq * 10, body }
    }

    #[test]
    fn wire_shape() {
        let e = ev(3, EventBody::NoteChecked { id: NoteId(7) });
        assert_eq!(to_line(&e), r#"{"seq":3,"t":30,"kind":"note_checked","payload":{"id":7}}"#);
        let end = ev(4, EventBody::SessionEnd {});
        assert_eq!(to_line(&end), r#"{"seq":4,"t":40,"kind":"session_end","payload":{}}"#);
    }

    #[test]
    fn roundtrip_and_errors() {
        let events = vec![
            ev(1, EventBody::FragmentIn(TranscriptFragment::final_text("hi there", 0, 5))),
            ev(2, EventBody::PointerIn(PointerSample::new_2d(1.5, 2.0, 8))),
            ev(3, EventBody::SessionEnd {}),
        ];
        let text = to_jsonl(&events);
        assert_eq!(parse_jsonl(&text).unwrap(), events);

        let truncated = &text[..text.len() - 5];
        match parse_jsonl(truncated) {
            Err(LogError::Corrupt { line, .. }) => assert_eq!(line, 3),
            other => panic!("expected corrupt log, got {other:?}"),
        }

        let swapped = format!("{}\n{}\n", to_line(&events[1]), to_line(&events[0]));
        assert!(matches!(parse_jsonl(&swapped), Err(LogError::Corrupt { line: 2, .. })));
        assert!(parse_jsonl("").unwrap().is_empty());
    }

    #[test]
    fn writer_appends_lines() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join(log_file_name("abc"));
        let mut w = LogWriter::create(&path).unwrap();
        w.append(&ev(1, EventBody::SessionEnd {})).unwrap();
        w.append(&ev(2, EventBody::SessionEnd {})).unwrap();
        assert_eq!(read_log_file(&path).unwrap().len(), 2);
    }
}
