//! Rebuilding a session from the inputs recorded in its log.

use std::sync::Arc;

use crate::engine::{ClientMessage, Engine, JobMode};
use crate::error::{LogError, ReplayError};
use crate::event::{self, EventBody, SessionEvent};
use crate::oracle::SemanticOracle;

fn as_message(body: &EventBody) -> Option<ClientMessage> {
    Some(match body {
        EventBody::FragmentIn(f) => ClientMessage::Fragment(f.clone()),
        EventBody::PointerIn(s) => ClientMessage::Pointer(*s),
        EventBody::ViewChange { view } => ClientMessage::ViewChange { view: *view },
        EventBody::NoteChecked { id } => ClientMessage::NoteChecked { id: *id },
        EventBody::TipAck { id } => ClientMessage::TipAck { id: *id },
        EventBody::FilterApplied { labels } => ClientMessage::Filter { labels: labels.clone() },
        EventBody::SessionEnd {} => ClientMessage::End,
        _ => return None,
    })
}

/// Feeds the input events of `events` through a fresh inline engine. Output
/// events in the source are ignored; the engine regenerates them.
pub fn replay(events: &[SessionEvent], oracle: Arc<dyn SemanticOracle>) -> Result<Engine, ReplayError> {
    let Some(SessionEvent { body: EventBody::Config(config), .. }) = events.first() else {
        return Err(LogError::MissingConfig.into());
    };
    let mut engine = Engine::new(config.clone(), oracle, JobMode::Inline)?;
    for ev in &events[1..] {
        if let Some(msg) = as_message(&ev.body) {
            engine.handle(msg, ev.t).map_err(|source| ReplayError::Rejected { seq: ev.seq, source })?;
        }
    }
    Ok(engine)
}

/// Replays a JSONL log and returns the regenerated JSONL text.
pub fn replay_jsonl(src: &str, oracle: Arc<dyn SemanticOracle>) -> Result<String, ReplayError> {
    let events = event::parse_jsonl(src)?;
    let engine = replay(&events, oracle)?;
    Ok(event::to_jsonl(engine.log()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::{Canvas, Mode, SessionConfig};
    use crate::model::{PointerSample, TranscriptFragment};
    use crate::oracle::RuleOracle;

    #[test]
    fn regenerates_identical_log() {
        let oracle: Arc<dyn SemanticOracle> = Arc::new(RuleOracle::default());
        let cfg = SessionConfig::new(Mode::Full, Canvas { width: 800.0, height: 600.0 });
        let mut e = Engine::new(cfg, oracle.clone(), JobMode::Inline).unwrap();
        e.handle(ClientMessage::Pointer(PointerSample::new_2d(10.0, 20.0, 100)), 100).unwrap();
        let frag = TranscriptFragment::final_text("the kitchen window needs shade from the sun", 200, 3000);
        e.handle(ClientMessage::Fragment(frag), 3000).unwrap();
        e.advance(40_000);
        e.end(41_000);
        let original = event::to_jsonl(e.log());
        assert_eq!(replay_jsonl(&original, oracle).unwrap(), original);
    }

    #[test]
    fn missing_config_rejected() {
        let oracle: Arc<dyn SemanticOracle> = Arc::new(RuleOracle::default());
        let err = replay_jsonl("{\"seq\":1,\"t\":0,\"kind\":\"session_end\",\"payload\":{}}\n", oracle).unwrap_err();
        assert!(matches!(err, ReplayError::Log(LogError::MissingConfig)));
    }
}
