//! Tip candidate pool, display gating, pause nudges and response attribution.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::TipError;
use crate::model::{Millis, NoteId, TalkNote, TalkTip, TipCategory, TipId, TIP_TEXT_MAX};
use crate::oracle::{SemanticOracle, TipDraft};
use crate::text::Lexicon;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TipParams {
    pub generate_every_ms: Millis,
    pub gate_every_ms: Millis,
    /// Minimum time between two shown tips.
    pub min_gap_ms: Millis,
    /// A shown tip is dismissed after this long.
    pub display_ms: Millis,
    /// Silence that triggers a nudge.
    pub nudge_after_ms: Millis,
    /// A note starting this long after a tip was shown may answer it.
    pub response_window_ms: Millis,
    /// Speech considered when generating candidates.
    pub candidate_window_ms: Millis,
    /// Speech considered when gating.
    pub gate_window_ms: Millis,
    pub nudge_prompts: Vec<String>,
}

impl Default for TipParams {
    fn default() -> Self {
        Self {
            generate_every_ms: 20_000,
            gate_every_ms: 10_000,
            min_gap_ms: 30_000,
            display_ms: 8_000,
            nudge_after_ms: 12_000,
            response_window_ms: 30_000,
            candidate_window_ms: 60_000,
            gate_window_ms: 30_000,
            nudge_prompts: vec![
                "What are you thinking about right now?".into(),
                "What would you change here next?".into(),
                "Is anything about this area bothering you?".into(),
                "Which alternatives are you weighing?".into(),
            ],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct Visible {
    id: TipId,
    until: Millis,
}

#[derive(Debug, Clone, Default)]
pub struct TipState {
    params: TipParams,
    next_id: u64,
    pool: Vec<TalkTip>,
    shown: BTreeMap<TipId, TalkTip>,
    acked: BTreeMap<TipId, bool>,
    visible: Option<Visible>,
    last_shown_t: Option<Millis>,
    nudges: usize,
    /// Speech end the last nudge answered, so one silence yields one nudge.
    nudged_for: Option<Millis>,
}

impl TipState {
    pub fn new(params: TipParams) -> Self {
        Self { params, next_id: 1, ..Default::default() }
    }

    pub fn params(&self) -> &TipParams {
        &self.params
    }

    pub fn pool(&self) -> &[TalkTip] {
        &self.pool
    }

    pub fn shown(&self) -> impl Iterator<Item = &TalkTip> {
        self.shown.values()
    }

    pub fn visible(&self) -> Option<TipId> {
        self.visible.map(|v| v.id)
    }

    fn fresh_id(&mut self) -> TipId {
        let id = TipId(self.next_id.max(1));
        self.next_id = id.0 + 1;
        id
    }

    /// Nothing on screen and the minimum gap has elapsed.
    pub fn can_show(&self, now: Millis) -> bool {
        self.visible.is_none() && self.last_shown_t.is_none_or(|t| now.saturating_sub(t) >= self.params.min_gap_ms)
    }

    /// Asks the oracle for up to one tip per category and pools the ones not
    /// seen before. Failures yield nothing.
    pub fn generate_candidates(
        &mut self,
        recent_transcript: &str,
        brief: &str,
        now: Millis,
        oracle: &dyn SemanticOracle,
    ) -> Vec<TalkTip> {
        if recent_transcript.trim().is_empty() {
            return Vec::new();
        }
        let drafts = oracle.tip_candidates(recent_transcript, brief).unwrap_or_default();
        self.pool_drafts(drafts, now)
    }

    /// Pools drafts whose text is new, keeping at most one per category.
    pub fn pool_drafts(&mut self, drafts: Vec<TipDraft>, now: Millis) -> Vec<TalkTip> {
        let mut added: Vec<TalkTip> = Vec::new();
        for d in drafts {
            let text = d.text.trim().to_string();
            let n = text.chars().count();
            if n == 0 || n > TIP_TEXT_MAX || added.iter().any(|t| t.category == d.category) || added.len() == 3 {
                continue;
            }
            let known = self.pool.iter().chain(self.shown.values()).chain(added.iter()).any(|t| t.text == text);
            if known {
                continue;
            }
            let id = self.fresh_id();
            added.push(TalkTip { id, category: d.category, text, created_t: now, shown_t: None, responded: false });
        }
        self.pool.extend(added.iter().cloned());
        added
    }

    fn mark_shown(&mut self, mut tip: TalkTip, now: Millis) -> TalkTip {
        tip.shown_t = Some(now);
        self.visible = Some(Visible { id: tip.id, until: now + self.params.display_ms });
        self.last_shown_t = Some(now);
        self.shown.insert(tip.id, tip.clone());
        tip
    }

    /// Shows at most one pooled tip the oracle judges relevant.
    pub fn gate(&mut self, window: &str, now: Millis, oracle: &dyn SemanticOracle) -> Option<TalkTip> {
        if !self.can_show(now) || self.pool.is_empty() {
            return None;
        }
        let id = oracle.tip_gate(&self.pool, window).ok().flatten()?;
        let idx = self.pool.iter().position(|t| t.id == id)?;
        let tip = self.pool.remove(idx);
        Some(self.mark_shown(tip, now))
    }

    /// A probing question after a long silence, once per silence.
    pub fn pause_nudge(&mut self, now: Millis, t_last_speech: Millis) -> Option<TalkTip> {
        if now.saturating_sub(t_last_speech) <= self.params.nudge_after_ms
            || !self.can_show(now)
            || self.nudged_for == Some(t_last_speech)
            || self.params.nudge_prompts.is_empty()
        {
            return None;
        }
        let text = self.params.nudge_prompts[self.nudges % self.params.nudge_prompts.len()].clone();
        self.nudges += 1;
        self.nudged_for = Some(t_last_speech);
        let id = self.fresh_id();
        let tip = TalkTip {
            id,
            category: TipCategory::ProbingQuestion,
            text,
            created_t: now,
            shown_t: None,
            responded: false,
        };
        Some(self.mark_shown(tip, now))
    }

    /// Dismisses the visible tip once its display time is over.
    pub fn expire(&mut self, now: Millis) -> Option<TipId> {
        match self.visible {
            Some(v) if now >= v.until => {
                self.visible = None;
                Some(v.id)
            }
            _ => None,
        }
    }

    /// Explicit acknowledgment from the client; the next note in the
    /// response window counts as a response regardless of wording.
    pub fn ack(&mut self, id: TipId) -> Result<(), TipError> {
        if !self.shown.contains_key(&id) {
            return Err(if self.pool.iter().any(|t| t.id == id) {
                TipError::NotShown(id)
            } else {
                TipError::UnknownTip(id)
            });
        }
        self.acked.insert(id, true);
        Ok(())
    }

    /// Shown, unanswered tips that `note` answers: it starts within the
    /// response window and shares a content word with the tip, or the tip
    /// was acknowledged.
    pub fn responses_for(&self, note: &TalkNote, lexicon: &Lexicon) -> Vec<TipId> {
        self.shown
            .values()
            .filter(|t| !t.responded)
            .filter(|t| {
                let shown = t.shown_t.unwrap_or(Millis::MAX);
                note.t_start >= shown && note.t_start - shown <= self.params.response_window_ms
            })
            .filter(|t| self.acked.contains_key(&t.id) || lexicon.overlap(&t.text, &note.transcript) >= 1)
            .map(|t| t.id)
            .collect()
    }

    pub fn acked(&self, id: TipId) -> bool {
        self.acked.contains_key(&id)
    }

    pub fn record_response(&mut self, tip: TipId, _note: NoteId) -> Result<TalkTip, TipError> {
        let entry = match self.shown.get_mut(&tip) {
            Some(t) => t,
            None if self.pool.iter().any(|t| t.id == tip) => return Err(TipError::NotShown(tip)),
            None => return Err(TipError::UnknownTip(tip)),
        };
        entry.responded = true;
        Ok(entry.clone())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::{FailingOracle, RuleOracle};
    use crate::test_util::note_at;

    fn state() -> TipState {
        TipState::new(TipParams::default())
    }

    #[test]
    fn window_generates_glare_tip() {
        let mut s = state();
        let tips = s.generate_candidates("this window faces the street", "", 20_000, &RuleOracle::default());
        assert!(tips.iter().any(|t| t.text == "How to handle window glare issues?"));
        assert!(s.generate_candidates("", "", 40_000, &RuleOracle::default()).is_empty());
        assert!(s.generate_candidates("window", "", 40_000, &FailingOracle).is_empty());
        // same text is not pooled twice
        assert!(s.generate_candidates("window again", "", 60_000, &RuleOracle::default()).is_empty());
    }

    #[test]
    fn gate_respects_gap_and_overlap() {
        let o = RuleOracle::default();
        let mut s = state();
        s.generate_candidates("window", "", 0, &o);
        assert!(s.gate("the kitchen", 10_000, &o).is_none(), "no shared word");
        let shown = s.gate("look at that window", 10_000, &o).unwrap();
        assert_eq!(shown.shown_t, Some(10_000));
        assert!(s.pool().is_empty());
        assert_eq!(s.expire(17_999), None);
        assert_eq!(s.expire(18_000), Some(shown.id));

        s.generate_candidates("wall", "", 20_000, &o);
        assert!(s.gate("wall", 20_000, &o).is_none(), "10 s after the last tip");
        assert!(s.gate("wall", 41_000, &o).is_some(), "31 s after the last tip");
    }

    #[test]
    fn nudge_after_silence_only() {
        let mut s = state();
        assert!(s.pause_nudge(5_000, 0).is_none());
        let tip = s.pause_nudge(13_000, 0).unwrap();
        assert_eq!(tip.category, TipCategory::ProbingQuestion);
        s.expire(100_000);
        assert!(s.pause_nudge(200_000, 0).is_none(), "one nudge per silence");

        let mut s = state();
        s.generate_candidates("window", "", 0, &RuleOracle::default());
        s.gate("window", 3_000, &RuleOracle::default()).unwrap();
        s.expire(11_000);
        assert!(s.pause_nudge(13_000, 0).is_none(), "tip shown 10 s ago");
    }

    #[test]
    fn response_attribution() {
        let o = RuleOracle::default();
        let lx = Lexicon::default();
        let mut s = state();
        s.generate_candidates("window", "", 0, &o);
        let tip = s.gate("window", 1_000, &o).unwrap();

        let shutters =
            note_at(1, "You could think about external shutters, which will regulate temperature as well", 9_000);
        assert!(s.responses_for(&shutters, &lx).is_empty());

        let window = note_at(2, "the window could get a deeper sill", 9_000);
        assert_eq!(s.responses_for(&window, &lx), vec![tip.id]);

        let late = note_at(3, "the window again", 32_000);
        assert!(s.responses_for(&late, &lx).is_empty());

        s.ack(tip.id).unwrap();
        assert_eq!(s.responses_for(&shutters, &lx), vec![tip.id]);
        assert!(s.record_response(tip.id, shutters.id).unwrap().responded);
        assert_eq!(s.record_response(TipId(99), shutters.id), Err(TipError::UnknownTip(TipId(99))));
    }
}
