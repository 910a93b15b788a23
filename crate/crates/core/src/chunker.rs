//! Buffers final transcript fragments and promotes them to note segments on a
//! topic shift or a long pause.

use serde::{Deserialize, Serialize};

use crate::error::ChunkError;
use crate::model::{Millis, TranscriptFragment, Utterance};
use crate::oracle::{SemanticOracle, SplitVerdict};
use crate::text::{join_spaced, Lexicon};

/// Silence after which buffered speech is promoted.
pub const PAUSE_MS: Millis = 8000;

/// The oracle is not asked to split a buffer holding fewer content words.
pub const MIN_SPLIT_CONTENT_WORDS: usize = 4;

/// Buffered speech promoted as one unit.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PromotedSegment {
    pub utterances: Vec<Utterance>,
}

impl PromotedSegment {
    pub fn text(&self) -> String {
        join_spaced(self.utterances.iter().map(|u| u.text.as_str()))
    }

    pub fn t_start(&self) -> Millis {
        self.utterances.first().map_or(0, |u| u.t_start)
    }

    pub fn t_end(&self) -> Millis {
        self.utterances.last().map_or(0, |u| u.t_end)
    }
}

/// Why a segment was promoted.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PromotionCause {
    TopicShift,
    Pause,
    Flush,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ChunkBuffer {
    fragments: Vec<TranscriptFragment>,
}

impl ChunkBuffer {
    pub fn is_empty(&self) -> bool {
        self.fragments.is_empty()
    }

    pub fn fragments(&self) -> &[TranscriptFragment] {
        &self.fragments
    }

    /// End of the last buffered fragment; `None` for an empty buffer.
    pub fn t_last_end(&self) -> Option<Millis> {
        self.fragments.last().map(|f| f.t_end)
    }

    pub fn text(&self) -> String {
        join_spaced(self.fragments.iter().map(|f| f.text.as_str()))
    }

    fn drain(&mut self) -> Option<PromotedSegment> {
        if self.fragments.is_empty() {
            return None;
        }
        let utterances = self
            .fragments
            .drain(..)
            .map(|f| Utterance { text: f.text.trim().to_string(), t_start: f.t_start, t_end: f.t_end })
            .collect();
        Some(PromotedSegment { utterances })
    }
}

#[derive(Debug, Clone)]
pub struct Chunker {
    buffer: ChunkBuffer,
    lexicon: Lexicon,
    pause_ms: Millis,
    min_split_words: usize,
}

impl Chunker {
    pub fn new(lexicon: Lexicon, pause_ms: Millis) -> Self {
        Self { buffer: ChunkBuffer::default(), lexicon, pause_ms, min_split_words: MIN_SPLIT_CONTENT_WORDS }
    }

    pub fn buffer(&self) -> &ChunkBuffer {
        &self.buffer
    }

    /// Rejects what `ingest_fragment` would reject, without side effects.
    pub fn check(&self, frag: &TranscriptFragment) -> Result<(), ChunkError> {
        if !frag.is_final {
            return Err(ChunkError::NotFinal);
        }
        frag.validate()?;
        if let Some(t_last_end) = self.buffer.t_last_end() {
            if frag.t_start < t_last_end {
                return Err(ChunkError::OutOfOrder { t_start: frag.t_start, t_last_end });
            }
        }
        Ok(())
    }

    /// Appends `frag`, or promotes the buffer first when the oracle sees a new
    /// topic. Oracle failures count as "continue".
    pub fn ingest_fragment(
        &mut self,
        frag: TranscriptFragment,
        oracle: &dyn SemanticOracle,
    ) -> Result<Option<PromotedSegment>, ChunkError> {
        self.check(&frag)?;
        let mut promoted = None;
        if !self.buffer.is_empty() {
            let buffered = self.buffer.text();
            if self.lexicon.content_count(&buffered) >= self.min_split_words {
                let verdict = oracle.judge_split(&buffered, &frag.text).unwrap_or(SplitVerdict::Continue);
                if verdict == SplitVerdict::NewTopic {
                    promoted = self.buffer.drain();
                }
            }
        }
        self.buffer.fragments.push(frag);
        Ok(promoted)
    }

    /// Promotes the buffer when more than the pause threshold has passed
    /// since the last buffered speech.
    pub fn tick(&mut self, now: Millis) -> Option<PromotedSegment> {
        match self.buffer.t_last_end() {
            Some(t) if now.saturating_sub(t) > self.pause_ms => self.buffer.drain(),
            _ => None,
        }
    }

    pub fn flush(&mut self) -> Option<PromotedSegment> {
        self.buffer.drain()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::RuleOracle;

    fn chunker() -> Chunker {
        Chunker::new(Lexicon::default(), PAUSE_MS)
    }

    fn f(text: &str, a: Millis, b: Millis) -> TranscriptFragment {
        TranscriptFragment::final_text(text, a, b)
    }

    #[test]
    fn single_fragment_is_buffered() {
        let mut c = chunker();
        let out = c.ingest_fragment(f("I want to move this wall", 0, 1500), &RuleOracle::default()).unwrap();
        assert!(out.is_none());
        assert_eq!(c.buffer().fragments().len(), 1);
    }

    #[test]
    fn short_buffer_never_split() {
        // "the kitchen needs light" has three content words, below the guard,
        // so the marker in the next fragment is never judged.
        let mut c = chunker();
        let o = RuleOracle::default();
        c.ingest_fragment(f("the kitchen needs light", 0, 1000), &o).unwrap();
        let out = c.ingest_fragment(f("okay now the bathroom layout", 1200, 2500), &o).unwrap();
        assert!(out.is_none());
        assert_eq!(c.buffer().text(), "the kitchen needs light okay now the bathroom layout");
    }

    #[test]
    fn topic_shift_promotes_buffer() {
        let mut c = chunker();
        let o = RuleOracle::default();
        c.ingest_fragment(f("the kitchen needs more counter space here", 0, 2000), &o).unwrap();
        let out = c.ingest_fragment(f("okay now the bathroom layout", 2300, 3500), &o).unwrap().unwrap();
        assert_eq!(out.text(), "the kitchen needs more counter space here");
        assert_eq!((out.t_start(), out.t_end()), (0, 2000));
        assert_eq!(c.buffer().text(), "okay now the bathroom layout");
    }

    #[test]
    fn out_of_order_and_partial_rejected() {
        let mut c = chunker();
        let o = RuleOracle::default();
        c.ingest_fragment(f("first words here", 1000, 2000), &o).unwrap();
        assert_eq!(
            c.ingest_fragment(f("late", 1500, 2500), &o),
            Err(ChunkError::OutOfOrder { t_start: 1500, t_last_end: 2000 })
        );
        let partial = TranscriptFragment::partial("part", 2500, 2600);
        assert_eq!(c.ingest_fragment(partial, &o), Err(ChunkError::NotFinal));
    }

    #[test]
    fn pause_threshold_is_strict() {
        let o = RuleOracle::default();
        let mut c = chunker();
        c.ingest_fragment(f("something", 0, 1000), &o).unwrap();
        assert!(c.tick(1000 + 7900).is_none());
        assert!(c.tick(1000 + 8000).is_none());
        assert_eq!(c.tick(1000 + 8100).unwrap().text(), "something");
        assert!(c.buffer().is_empty());
        assert!(c.tick(50_000).is_none());
    }

    #[test]
    fn flush_drains_once() {
        let mut c = chunker();
        assert!(c.flush().is_none());
        c.ingest_fragment(f("final remark", 0, 500), &RuleOracle::default()).unwrap();
        assert_eq!(c.flush().unwrap().text(), "final remark");
        assert!(c.flush().is_none());
    }

    #[test]
    fn failing_oracle_continues() {
        let mut c = chunker();
        let o = crate::oracle::FailingOracle;
        c.ingest_fragment(f("the kitchen needs more counter space here", 0, 2000), &o).unwrap();
        assert!(c.ingest_fragment(f("okay now the bathroom", 2100, 3000), &o).unwrap().is_none());
    }
}
