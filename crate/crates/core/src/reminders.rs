//! Resurfacing earlier notes that relate to what is being said now.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::model::{Millis, NoteId, TalkNote, TalkReminder};
use crate::oracle::{NoteDigest, SemanticOracle};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReminderParams {
    pub every_ms: Millis,
    pub cooldown_ms: Millis,
    /// Reminders visible at the same time.
    pub max_visible: usize,
    pub display_ms: Millis,
    /// Speech considered "current"; notes ending inside it are not reminded.
    pub window_ms: Millis,
}

impl Default for ReminderParams {
    fn default() -> Self {
        Self { every_ms: 15_000, cooldown_ms: 120_000, max_visible: 2, display_ms: 6_000, window_ms: 30_000 }
    }
}

#[derive(Debug, Clone, Default)]
pub struct ReminderState {
    params: ReminderParams,
    cooldown_until: BTreeMap<NoteId, Millis>,
    visible: Vec<(NoteId, Millis)>,
}

impl ReminderState {
    pub fn new(params: ReminderParams) -> Self {
        Self { params, ..Default::default() }
    }

    pub fn params(&self) -> &ReminderParams {
        &self.params
    }

    pub fn cooling(&self, id: NoteId, now: Millis) -> bool {
        self.cooldown_until.get(&id).is_some_and(|until| now < *until)
    }

    pub fn visible(&self) -> impl Iterator<Item = NoteId> + '_ {
        self.visible.iter().map(|(id, _)| *id)
    }

    /// Earlier notes the oracle relates to `window`, skipping notes under
    /// cooldown. Every returned note starts a new cooldown.
    pub fn find_related<'a, I>(
        &mut self,
        window: &str,
        notes: I,
        now: Millis,
        oracle: &dyn SemanticOracle,
    ) -> Vec<TalkReminder>
    where
        I: IntoIterator<Item = &'a TalkNote>,
    {
        let slots = self.params.max_visible.saturating_sub(self.visible.len());
        if slots == 0 || window.trim().is_empty() {
            return Vec::new();
        }
        let current_from = now.saturating_sub(self.params.window_ms);
        let candidates: Vec<NoteDigest> = notes
            .into_iter()
            .filter(|n| n.t_end < current_from && !self.cooling(n.id, now))
            .map(|n| NoteDigest { id: n.id, transcript: n.transcript.clone(), summary: n.summary.clone() })
            .collect();
        if candidates.is_empty() {
            return Vec::new();
        }
        let ids = oracle.related_notes(window, &candidates).unwrap_or_default();
        let mut out: Vec<TalkReminder> = Vec::new();
        for id in ids {
            if out.len() == slots {
                break;
            }
            if out.iter().any(|r| r.note_id == id) || !candidates.iter().any(|c| c.id == id) {
                continue;
            }
            let reminder =
                TalkReminder { note_id: id, triggered_t: now, cooldown_until: now + self.params.cooldown_ms };
            self.cooldown_until.insert(id, reminder.cooldown_until);
            self.visible.push((id, now + self.params.display_ms));
            out.push(reminder);
        }
        out
    }

    /// Hides reminders whose display time is over.
    pub fn expire(&mut self, now: Millis) -> Vec<NoteId> {
        let (gone, keep): (Vec<_>, Vec<_>) = self.visible.iter().partition(|(_, until)| now >= *until);
        self.visible = keep;
        gone.into_iter().map(|(id, _)| id).collect()
    }

    /// Forgets a note that stopped being live.
    pub fn forget(&mut self, id: NoteId) {
        self.cooldown_until.remove(&id);
        self.visible.retain(|(n, _)| *n != id);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::{FailingOracle, RuleOracle};
    use crate::test_util::note_at;

    #[test]
    fn related_note_returned_then_cooled() {
        let o = RuleOracle::default();
        let mut st = ReminderState::default();
        let prior = note_at(1, "bedroom wall and door", 0);
        let hits = st.find_related("the bedroom wall", [&prior], 60_000, &o);
        assert_eq!(hits.len(), 1);
        assert_eq!(hits[0].note_id, NoteId(1));
        assert_eq!(hits[0].cooldown_until, 180_000);

        st.expire(200_000);
        assert!(st.find_related("the bedroom wall", [&prior], 120_000, &o).is_empty(), "60 s later");
        assert_eq!(st.find_related("the bedroom wall", [&prior], 180_000, &o).len(), 1);
    }

    #[test]
    fn nothing_without_prior_notes() {
        let mut st = ReminderState::default();
        assert!(st.find_related("bedroom wall", std::iter::empty(), 60_000, &RuleOracle::default()).is_empty());
        let prior = note_at(1, "bedroom wall", 0);
        assert!(st.find_related("bedroom wall", [&prior], 60_000, &FailingOracle).is_empty());
    }

    #[test]
    fn current_speech_not_reminded() {
        let mut st = ReminderState::default();
        let current = note_at(1, "bedroom wall", 50_000);
        assert!(st.find_related("bedroom wall", [&current], 60_000, &RuleOracle::default()).is_empty());
    }

    #[test]
    fn at_most_two_visible() {
        let o = RuleOracle::default();
        let mut st = ReminderState::default();
        let notes: Vec<_> = (1..=4).map(|i| note_at(i, "bedroom wall", i * 1000)).collect();
        let hits = st.find_related("bedroom wall", notes.iter(), 60_000, &o);
        assert_eq!(hits.len(), 2);
        assert!(st.find_related("bedroom wall", notes.iter(), 61_000, &o).is_empty());
        assert_eq!(st.expire(66_000).len(), 2);
        assert_eq!(st.find_related("bedroom wall", notes.iter(), 75_000, &o).len(), 2);
    }
}
