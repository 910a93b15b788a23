use serde::{Deserialize, Serialize};

use crate::event::{EventBody, SessionEvent};
use crate::model::Millis;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SessionStats {
    pub duration: Millis,
    pub notes_created: usize,
    pub notes_merged: usize,
    pub notes_checked: usize,
    pub tips_shown: usize,
    pub tip_responses: usize,
    pub reminders_shown: usize,
    pub filter_applications: usize,
}

impl SessionStats {
    pub fn duration_minutes(&self) -> f64 {
        self.duration as f64 / 60_000.0
    }
}

pub fn session_stats(log: &[SessionEvent]) -> SessionStats {
    let mut s = SessionStats { duration: log.iter().map(|e| e.t).max().unwrap_or(0), ..Default::default() };
    for e in log {
        match e.body {
            EventBody::NoteCreated { .. } => s.notes_created += 1,
            EventBody::NoteMerged { .. } => s.notes_merged += 1,
            EventBody::NoteChecked { .. } => s.notes_checked += 1,
            EventBody::TipShown { .. } => s.tips_shown += 1,
            EventBody::TipResponse { .. } => s.tip_responses += 1,
            EventBody::ReminderShown { .. } => s.reminders_shown += 1,
            EventBody::FilterApplied { .. } => s.filter_applications += 1,
            _ => {}
        }
    }
    s
}

/// Final transcript of a session, in arrival order.
pub fn final_transcript(log: &[SessionEvent]) -> String {
    crate::text::join_spaced(log.iter().filter_map(|e| match &e.body {
        EventBody::FragmentIn(f) if f.is_final => Some(f.text.as_str()),
        _ => None,
    }))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum EngagementPattern {
    NoteExplorer,
    TipDrivenElaborator,
    HeavyIntegrator,
    DocumentationOnly,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct EngagementThresholds {
    pub explorer_checked: usize,
    pub tip_responses: usize,
}

impl Default for EngagementThresholds {
    fn default() -> Self {
        Self { explorer_checked: 4, tip_responses: 7 }
    }
}

pub fn classify_engagement(stats: &SessionStats, th: &EngagementThresholds) -> EngagementPattern {
    let explorer = stats.notes_checked >= th.explorer_checked;
    let tips = stats.tip_responses >= th.tip_responses;
    match (explorer, tips) {
        (true, true) => EngagementPattern::HeavyIntegrator,
        (true, false) => EngagementPattern::NoteExplorer,
        (false, true) => EngagementPattern::TipDrivenElaborator,
        (false, false) => EngagementPattern::DocumentationOnly,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum RecapPattern {
    LightRecapUser,
    IterativeRecapUser,
    PowerRecapUser,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct RecapBands {
    pub iterative_from: usize,
    pub power_from: usize,
    /// Filter applications that lift the band by one.
    pub filter_shift: usize,
}

impl Default for RecapBands {
    fn default() -> Self {
        Self { iterative_from: 2, power_from: 6, filter_shift: 3 }
    }
}

pub fn classify_recap(stats: &SessionStats, bands: &RecapBands) -> RecapPattern {
    use RecapPattern::*;
    let base = if stats.notes_checked >= bands.power_from {
        PowerRecapUser
    } else if stats.notes_checked >= bands.iterative_from {
        IterativeRecapUser
    } else {
        LightRecapUser
    };
    if stats.filter_applications < bands.filter_shift {
        return base;
    }
    match base {
        LightRecapUser => IterativeRecapUser,
        _ => PowerRecapUser,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn stats(checked: usize, responses: usize, filters: usize) -> SessionStats {
        SessionStats {
            notes_checked: checked,
            tip_responses: responses,
            filter_applications: filters,
            ..Default::default()
        }
    }

    #[test]
    fn engagement_examples() {
        let th = EngagementThresholds::default();
        assert_eq!(classify_engagement(&stats(11, 2, 0), &th), EngagementPattern::NoteExplorer);
        assert_eq!(classify_engagement(&stats(4, 24, 0), &th), EngagementPattern::HeavyIntegrator);
        assert_eq!(classify_engagement(&stats(1, 7, 0), &th), EngagementPattern::TipDrivenElaborator);
        assert_eq!(classify_engagement(&stats(0, 3, 0), &th), EngagementPattern::DocumentationOnly);
    }

    #[test]
    fn recap_examples() {
        let b = RecapBands::default();
        assert_eq!(classify_recap(&stats(0, 0, 0), &b), RecapPattern::LightRecapUser);
        assert_eq!(classify_recap(&stats(8, 0, 4), &b), RecapPattern::PowerRecapUser);
        assert_eq!(classify_recap(&stats(3, 0, 1), &b), RecapPattern::IterativeRecapUser);
        assert_eq!(classify_recap(&stats(1, 0, 3), &b), RecapPattern::IterativeRecapUser);
    }

    #[test]
    fn empty_log_is_all_zero() {
        assert_eq!(session_stats(&[]), SessionStats::default());
    }
}
