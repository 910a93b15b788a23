//! Offline analysis of session logs.

mod stats;
mod timeline;
mod wpm;

pub use stats::{
    classify_engagement, classify_recap, final_transcript, session_stats, EngagementPattern, EngagementThresholds,
    RecapBands, RecapPattern, SessionStats,
};
pub use timeline::{timeline, write_timeline_csv, TimelineRow};
pub use wpm::{count_words, wpm, CONTRACTIONS};
