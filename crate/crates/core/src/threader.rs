//! Incremental grouping of notes into threads, and label filtering.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::model::{Millis, NoteId, ProcessLabel, TalkNote, TalkThread, ThreadId};
use crate::oracle::SemanticOracle;
use crate::text;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThreadParams {
    /// Threads idle longer than this do not take new notes.
    pub window_ms: Millis,
    /// Minimum affinity to join an existing thread.
    pub min_affinity: f64,
    /// How many of a thread's latest notes form its comparison text.
    pub context_notes: usize,
    pub title_chars: usize,
}

impl Default for ThreadParams {
    fn default() -> Self {
        Self { window_ms: 300_000, min_affinity: 0.2, context_notes: 3, title_chars: 80 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Placement {
    Existing(ThreadId),
    New,
}

/// Owns the thread list. Note bodies live with the caller.
#[derive(Debug, Clone, Default)]
pub struct Threader {
    threads: Vec<TalkThread>,
    params: ThreadParams,
}

impl Threader {
    pub fn new(params: ThreadParams) -> Self {
        Self { threads: Vec::new(), params }
    }

    pub fn threads(&self) -> &[TalkThread] {
        &self.threads
    }

    pub fn get(&self, id: ThreadId) -> Option<&TalkThread> {
        self.threads.iter().find(|t| t.id == id)
    }

    fn context(&self, thread: &TalkThread, notes: &BTreeMap<NoteId, TalkNote>) -> String {
        let skip = thread.note_ids.len().saturating_sub(self.params.context_notes);
        text::join_spaced(thread.note_ids[skip..].iter().filter_map(|id| notes.get(id)).map(|n| n.transcript.as_str()))
    }

    /// Picks the most affine thread that is recent enough, or `New`. Ties go
    /// to the thread touched most recently.
    pub fn place(&self, note: &TalkNote, notes: &BTreeMap<NoteId, TalkNote>, oracle: &dyn SemanticOracle) -> Placement {
        let mut best: Option<(f64, Millis, ThreadId)> = None;
        for thread in &self.threads {
            if note.t_start.saturating_sub(thread.t_last) > self.params.window_ms {
                continue;
            }
            let affinity = oracle.thread_affinity(&note.transcript, &self.context(thread, notes)).unwrap_or(0.0);
            if affinity.is_nan() || affinity < self.params.min_affinity {
                continue;
            }
            let candidate = (affinity, thread.t_last, thread.id);
            let better = match best {
                None => true,
                Some(b) => candidate.0 > b.0 || (candidate.0 == b.0 && (candidate.1, candidate.2) > (b.1, b.2)),
            };
            if better {
                best = Some(candidate);
            }
        }
        best.map_or(Placement::New, |(_, _, id)| Placement::Existing(id))
    }

    /// Places `note` and records the membership. Returns the thread id and
    /// whether the thread is new.
    pub fn assign(
        &mut self,
        note: &TalkNote,
        notes: &BTreeMap<NoteId, TalkNote>,
        oracle: &dyn SemanticOracle,
    ) -> (ThreadId, bool) {
        match self.place(note, notes, oracle) {
            Placement::Existing(id) => {
                self.join(id, note);
                (id, false)
            }
            Placement::New => (self.open(note), true),
        }
    }

    pub fn open(&mut self, note: &TalkNote) -> ThreadId {
        let id = ThreadId(self.threads.iter().map(|t| t.id.0).max().unwrap_or(0) + 1);
        let title = note
            .summary
            .clone()
            .filter(|s| !s.is_empty())
            .unwrap_or_else(|| text::truncate_chars(&note.transcript, self.params.title_chars));
        self.threads.push(TalkThread { id, title, note_ids: vec![note.id], t_last: note.t_end });
        id
    }

    pub fn join(&mut self, id: ThreadId, note: &TalkNote) {
        if let Some(t) = self.threads.iter_mut().find(|t| t.id == id) {
            if !t.note_ids.contains(&note.id) {
                t.note_ids.push(note.id);
            }
            t.t_last = t.t_last.max(note.t_end);
        }
    }

    /// Extends a thread's recency after one of its notes absorbed another.
    pub fn touch(&mut self, id: ThreadId, t: Millis) {
        if let Some(th) = self.threads.iter_mut().find(|th| th.id == id) {
            th.t_last = th.t_last.max(t);
        }
    }

    /// Removes a note from whatever thread holds it, dropping emptied threads.
    pub fn remove(&mut self, note: NoteId) {
        for t in &mut self.threads {
            t.note_ids.retain(|n| *n != note);
        }
        self.threads.retain(|t| !t.note_ids.is_empty());
    }
}

/// Notes of one thread that passed a filter.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThreadGroup {
    pub thread_id: Option<ThreadId>,
    pub title: String,
    pub notes: Vec<TalkNote>,
}

pub fn matches(note: &TalkNote, labels: &BTreeSet<ProcessLabel>) -> bool {
    labels.is_empty() || !note.labels.is_disjoint(labels)
}

/// Notes whose labels intersect `labels` (all notes for an empty filter),
/// grouped by thread in thread order. Notes not yet threaded come last.
pub fn filter_notes(
    threads: &[TalkThread],
    notes: &BTreeMap<NoteId, TalkNote>,
    labels: &BTreeSet<ProcessLabel>,
) -> Vec<ThreadGroup> {
    let mut groups = Vec::new();
    let mut seen = BTreeSet::new();
    for t in threads {
        let members: Vec<TalkNote> = t
            .note_ids
            .iter()
            .filter_map(|id| notes.get(id))
            .inspect(|n| {
                seen.insert(n.id);
            })
            .filter(|n| matches(n, labels))
            .cloned()
            .collect();
        if !members.is_empty() {
            groups.push(ThreadGroup { thread_id: Some(t.id), title: t.title.clone(), notes: members });
        }
    }
    let loose: Vec<TalkNote> =
        notes.values().filter(|n| !seen.contains(&n.id) && matches(n, labels)).cloned().collect();
    if !loose.is_empty() {
        groups.push(ThreadGroup { thread_id: None, title: String::new(), notes: loose });
    }
    groups
}

/// Flat variant of [`filter_notes`].
pub fn filter_flat(
    threads: &[TalkThread],
    notes: &BTreeMap<NoteId, TalkNote>,
    labels: &BTreeSet<ProcessLabel>,
) -> Vec<TalkNote> {
    filter_notes(threads, notes, labels).into_iter().flat_map(|g| g.notes).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{AnchorConfidence, AnchorPoint, EnrichmentState, PointerTrace, View};
    use crate::oracle::RuleOracle;

    pub(crate) fn note(id: u64, text: &str, t: Millis, labels: &[ProcessLabel]) -> TalkNote {
        TalkNote {
            id: NoteId(id),
            transcript: text.into(),
            t_start: t,
            t_end: t + 2000,
            summary: Some(text.into()),
            labels: labels.iter().copied().collect(),
            actions: vec![],
            anchor: AnchorPoint { x: 0.0, y: 0.0, z: None, view: View::TwoD, confidence: AnchorConfidence::Fallback },
            trace: PointerTrace::default(),
            linked_elements: BTreeSet::new(),
            thread_id: None,
            merged_from: vec![],
            enrichment_state: EnrichmentState::Enriched,
            utterances: vec![],
        }
    }

    fn run(texts: &[(&str, Millis)]) -> (Threader, BTreeMap<NoteId, TalkNote>) {
        let mut th = Threader::default();
        let mut notes = BTreeMap::new();
        for (i, (text, t)) in texts.iter().enumerate() {
            let n = note(i as u64 + 1, text, *t, &[]);
            th.assign(&n, &notes, &RuleOracle::default());
            notes.insert(n.id, n);
        }
        (th, notes)
    }

    #[test]
    fn first_note_opens_thread() {
        let (th, _) = run(&[("bedroom wall", 0)]);
        assert_eq!(th.threads().len(), 1);
        assert_eq!(th.threads()[0].title, "bedroom wall");
    }

    #[test]
    fn identical_text_joins() {
        let (th, _) = run(&[("bedroom wall door", 0), ("bedroom wall door", 12_000)]);
        assert_eq!(th.threads().len(), 1);
        assert_eq!(th.threads()[0].note_ids, vec![NoteId(1), NoteId(2)]);
    }

    #[test]
    fn disjoint_text_opens_new() {
        let (th, _) = run(&[("bedroom wall door", 0), ("kitchen sink pantry", 12_000)]);
        assert_eq!(th.threads().len(), 2);
    }

    #[test]
    fn stale_thread_not_joined() {
        let (th, _) = run(&[("bedroom wall door", 0), ("bedroom wall door", 2000 + 300_001)]);
        assert_eq!(th.threads().len(), 2);
    }

    #[test]
    fn tie_goes_to_most_recent_thread() {
        // threads 1 and 2 both have affinity 1/3 with the last note
        let (th, _) = run(&[("alpha beta", 0), ("gamma delta", 10_000), ("alpha gamma", 20_000)]);
        assert_eq!(th.threads().len(), 2);
        assert_eq!(th.threads()[1].note_ids, vec![NoteId(2), NoteId(3)]);
    }

    #[test]
    fn filter_examples() {
        use ProcessLabel::*;
        let mut notes = BTreeMap::new();
        notes.insert(NoteId(1), note(1, "a", 0, &[Question]));
        notes.insert(NoteId(2), note(2, "b", 0, &[Process]));
        notes.insert(NoteId(3), note(3, "c", 0, &[ToDo, Important]));
        let threads = vec![TalkThread {
            id: ThreadId(1),
            title: "t".into(),
            note_ids: vec![NoteId(1), NoteId(2), NoteId(3)],
            t_last: 0,
        }];
        let ids = |ls: &[ProcessLabel]| {
            filter_flat(&threads, &notes, &ls.iter().copied().collect()).iter().map(|n| n.id.0).collect::<Vec<_>>()
        };
        assert_eq!(ids(&[Question]), vec![1]);
        assert_eq!(ids(&[]), vec![1, 2, 3]);
        assert_eq!(ids(&[ToDo, Problem]), vec![3]);
    }

    #[test]
    fn remove_drops_empty_threads() {
        let (mut th, _) = run(&[("bedroom wall door", 0)]);
        th.remove(NoteId(1));
        assert!(th.threads().is_empty());
    }
}
