use std::io;

use crate::event::{EventBody, SessionEvent};
use crate::model::Millis;
use crate::text;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TimelineRow {
    pub t: Millis,
    pub kind: &'static str,
    pub detail: String,
}

const DETAIL_CHARS: usize = 60;

fn detail(body: &EventBody) -> Option<String> {
    Some(match body {
        EventBody::NoteCreated { note, .. } => {
            format!("{}: {}", note.id, text::truncate_chars(&note.transcript, DETAIL_CHARS))
        }
        EventBody::NoteMerged { into, from, .. } => format!("{from} -> {into}"),
        EventBody::NoteChecked { id } => id.to_string(),
        EventBody::TipShown { tip, nudge } => {
            let tag = if *nudge { " (nudge)" } else { "" };
            format!("{}{tag}: {}", tip.id, tip.text)
        }
        EventBody::TipResponse { tip_id, note_id, .. } => format!("{note_id} answers {tip_id}"),
        EventBody::ReminderShown { reminder, .. } => reminder.note_id.to_string(),
        _ => return None,
    })
}

/// Plot-relevant events sorted by time. The sort is stable, so events at
/// the same time keep log order.
pub fn timeline(log: &[SessionEvent]) -> Vec<TimelineRow> {
    let mut rows: Vec<TimelineRow> = log
        .iter()
        .filter_map(|e| detail(&e.body).map(|d| TimelineRow { t: e.t, kind: e.body.kind(), detail: d }))
        .collect();
    rows.sort_by_key(|r| r.t);
    rows
}

pub fn write_timeline_csv<W: io::Write>(log: &[SessionEvent], out: W) -> Result<(), csv::Error> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["t", "event_kind", "detail"])?;
    for row in timeline(log) {
        w.write_record([row.t.to_string().as_str(), row.kind, row.detail.as_str()])?;
    }
    w.flush()?;
    Ok(())
}
