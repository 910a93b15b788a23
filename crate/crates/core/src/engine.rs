//! The per-session event loop.
//!
//! The engine is synchronous. Time only moves when the host says so:
//! `handle(msg, now)` and `advance(now)` first run every tick up to `now`,
//! then process the input. Ticks fall on multiples of `tick_ms` and are never
//! logged, so a log of inputs and their arrival times is enough to rebuild
//! the whole session.
//!
//! Enrichment and tip generation are jobs. In inline mode they run on the
//! spot, which keeps a session a pure function of its inputs. In deferred
//! mode the host takes them with [`Engine::take_jobs`], runs them wherever
//! it likes and hands the outcome back to [`Engine::complete`]; results for
//! a note that changed in the meantime are discarded.

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::sync::Arc;
use std::time::Duration;

use serde::{Deserialize, Serialize};

use crate::chunker::{Chunker, PromotedSegment, PromotionCause};
use crate::config::{Canvas, Mode, SessionConfig};
use crate::error::{ConfigError, EngineError};
use crate::event::{EventBody, SessionEvent};
use crate::model::{
    Millis, NoteId, PointerSample, ProcessLabel, SceneElement, TalkNote, TalkThread, TipId, TranscriptFragment,
    Utterance, View,
};
use crate::notes::{self, AnchorContext, Enrichment, MergeOutcome, RetryPolicy};
use crate::oracle::{SemanticOracle, TipDraft};
use crate::reminders::ReminderState;
use crate::text::{self, Lexicon};
use crate::threader::{self, ThreadGroup, Threader};
use crate::tips::TipState;
use crate::trace::TraceStore;

/// Messages a client sends over the live stream.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum ClientMessage {
    Fragment(TranscriptFragment),
    Pointer(PointerSample),
    ViewChange { view: View },
    NoteChecked { id: NoteId },
    TipAck { id: TipId },
    Filter { labels: BTreeSet<ProcessLabel> },
    End,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum JobMode {
    Inline,
    Deferred,
}

#[derive(Debug, Clone, PartialEq)]
#[allow(clippy::large_enum_variant)]
pub enum Job {
    Enrich { note: TalkNote, revision: u64 },
    Tips { transcript: String, brief: String },
}

#[derive(Debug, Clone, PartialEq)]
pub enum JobOutcome {
    Enriched { id: NoteId, revision: u64, enrichment: Enrichment, linked: BTreeSet<String> },
    TipDrafts(Vec<TipDraft>),
}

/// Everything a job needs, detachable from the engine.
#[derive(Clone)]
pub struct JobRunner {
    oracle: Arc<dyn SemanticOracle>,
    scene: Arc<Vec<SceneElement>>,
    canvas: Canvas,
    containment: f64,
    retry: RetryPolicy,
}

impl JobRunner {
    pub fn oracle(&self) -> &dyn SemanticOracle {
        self.oracle.as_ref()
    }

    pub fn run(&self, job: &Job, sleep: &mut dyn FnMut(Duration)) -> JobOutcome {
        match job {
            Job::Enrich { note, revision } => {
                let oracle = self.oracle.as_ref();
                let enrichment = notes::enrich_transcript(&note.transcript, oracle, &self.retry, sleep);
                let image = if oracle.wants_image() && !self.scene.is_empty() {
                    notes::overlay_png(note, &self.scene, (self.canvas.width, self.canvas.height))
                } else {
                    None
                };
                let linked = notes::link_elements(note, &self.scene, oracle, self.containment, image.as_deref());
                JobOutcome::Enriched { id: note.id, revision: *revision, enrichment, linked }
            }
            Job::Tips { transcript, brief } => {
                JobOutcome::TipDrafts(self.oracle.tip_candidates(transcript, brief).unwrap_or_default())
            }
        }
    }
}

pub struct Engine {
    config: SessionConfig,
    canvas: Canvas,
    runner: JobRunner,
    job_mode: JobMode,
    lexicon: Lexicon,
    chunker: Chunker,
    store: TraceStore,
    threader: Threader,
    tips: TipState,
    reminders: ReminderState,
    notes: BTreeMap<NoteId, TalkNote>,
    /// Live notes in creation order.
    order: Vec<NoteId>,
    revisions: BTreeMap<NoteId, u64>,
    merge_checked: BTreeSet<NoteId>,
    next_note: u64,
    finals: Vec<Utterance>,
    view: View,
    t_last_speech: Option<Millis>,
    /// End of the newest partial fragment not yet covered by a final one.
    partial_until: Option<Millis>,
    clock: Millis,
    next_tick: Millis,
    log: Vec<SessionEvent>,
    jobs: VecDeque<Job>,
    ended: bool,
}

impl Engine {
    /// Opens a session. The config is the first logged event.
    pub fn new(config: SessionConfig, oracle: Arc<dyn SemanticOracle>, job_mode: JobMode) -> Result<Self, ConfigError> {
        let canvas = config.validate()?;
        let p = config.params.clone();
        let lexicon = Lexicon::default();
        let runner = JobRunner {
            oracle,
            scene: Arc::new(config.scene.clone()),
            canvas,
            containment: p.link_containment,
            retry: RetryPolicy::default(),
        };
        let mut engine = Self {
            canvas,
            runner,
            job_mode,
            chunker: Chunker::new(lexicon.clone(), p.pause_ms),
            lexicon,
            store: TraceStore::new(p.downsample_bucket_ms),
            threader: Threader::new(p.threads),
            tips: TipState::new(p.tips.clone()),
            reminders: ReminderState::new(p.reminders),
            notes: BTreeMap::new(),
            order: Vec::new(),
            revisions: BTreeMap::new(),
            merge_checked: BTreeSet::new(),
            next_note: 1,
            finals: Vec::new(),
            view: View::TwoD,
            t_last_speech: None,
            partial_until: None,
            clock: 0,
            next_tick: p.tick_ms,
            log: Vec::new(),
            jobs: VecDeque::new(),
            ended: false,
            config,
        };
        engine.emit(0, EventBody::Config(engine.config.clone()));
        Ok(engine)
    }

    pub fn config(&self) -> &SessionConfig {
        &self.config
    }

    pub fn mode(&self) -> Mode {
        self.config.mode
    }

    pub fn log(&self) -> &[SessionEvent] {
        &self.log
    }

    pub fn notes(&self) -> &BTreeMap<NoteId, TalkNote> {
        &self.notes
    }

    pub fn threads(&self) -> &[TalkThread] {
        self.threader.threads()
    }

    pub fn tips(&self) -> &TipState {
        &self.tips
    }

    pub fn clock(&self) -> Millis {
        self.clock
    }

    pub fn is_ended(&self) -> bool {
        self.ended
    }

    pub fn late_samples_dropped(&self) -> u64 {
        self.store.late_dropped()
    }

    pub fn job_runner(&self) -> JobRunner {
        self.runner.clone()
    }

    pub fn pending_jobs(&self) -> usize {
        self.jobs.len()
    }

    /// Live notes whose labels intersect `labels`, grouped by thread.
    pub fn query_notes(&self, labels: &BTreeSet<ProcessLabel>) -> Vec<ThreadGroup> {
        threader::filter_notes(self.threader.threads(), &self.notes, labels)
    }

    fn emit(&mut self, t: Millis, body: EventBody) {
        let seq = self.log.len() as u64 + 1;
        self.log.push(SessionEvent { seq, t, body });
    }

    fn since(&self, mark: usize) -> Vec<SessionEvent> {
        self.log[mark..].to_vec()
    }

    fn full(&self) -> bool {
        self.config.mode == Mode::Full
    }

    /// Runs ticks up to `now` without any input.
    pub fn advance(&mut self, now: Millis) -> Vec<SessionEvent> {
        let mark = self.log.len();
        if !self.ended {
            self.advance_to(now);
        }
        self.since(mark)
    }

    pub fn handle(&mut self, msg: ClientMessage, now: Millis) -> Result<Vec<SessionEvent>, EngineError> {
        if self.ended {
            return Err(EngineError::Ended);
        }
        let mark = self.log.len();
        match msg {
            ClientMessage::Fragment(frag) => self.on_fragment(frag, now)?,
            ClientMessage::Pointer(sample) => {
                sample.validate()?;
                self.advance_to(now);
                self.view = sample.view;
                self.store.record_sample(sample);
                self.emit(self.clock, EventBody::PointerIn(sample));
            }
            ClientMessage::ViewChange { view } => {
                self.advance_to(now);
                self.view = view;
                self.emit(self.clock, EventBody::ViewChange { view });
            }
            ClientMessage::NoteChecked { id } => {
                if !self.notes.contains_key(&id) {
                    return Err(EngineError::UnknownNote(id));
                }
                self.advance_to(now);
                self.emit(self.clock, EventBody::NoteChecked { id });
            }
            ClientMessage::TipAck { id } => {
                self.tips.ack(id)?;
                self.advance_to(now);
                self.emit(self.clock, EventBody::TipAck { id });
            }
            ClientMessage::Filter { labels } => {
                self.advance_to(now);
                self.emit(self.clock, EventBody::FilterApplied { labels });
            }
            ClientMessage::End => self.end_at(now),
        }
        Ok(self.since(mark))
    }

    /// Ends the session: the open chunk is flushed into a final note.
    pub fn end(&mut self, now: Millis) -> Vec<SessionEvent> {
        let mark = self.log.len();
        if !self.ended {
            self.end_at(now);
        }
        self.since(mark)
    }

    fn end_at(&mut self, now: Millis) {
        self.advance_to(now);
        self.emit(self.clock, EventBody::SessionEnd {});
        if self.full() {
            if let Some(seg) = self.chunker.flush() {
                self.promote(seg, PromotionCause::Flush, self.clock);
            }
        }
        self.ended = true;
    }

    fn on_fragment(&mut self, frag: TranscriptFragment, now: Millis) -> Result<(), EngineError> {
        if frag.is_final && self.full() {
            self.chunker.check(&frag)?;
        } else {
            frag.validate()?;
        }
        if !frag.is_final {
            self.advance_to(now);
            self.t_last_speech = Some(self.t_last_speech.unwrap_or(0).max(frag.t_end));
            self.partial_until = Some(self.partial_until.unwrap_or(0).max(frag.t_end));
            self.emit(self.clock, EventBody::FragmentIn(frag));
            return Ok(());
        }
        // Ticks up to the start of speech, then the pause measured exactly
        // at that start, before the fragment can join the buffer.
        self.advance_to(frag.t_start.min(now));
        if self.full() {
            if let Some(seg) = self.chunker.tick(frag.t_start) {
                self.promote(seg, PromotionCause::Pause, self.clock);
            }
        }
        self.clock = self.clock.max(now);
        self.t_last_speech = Some(self.t_last_speech.unwrap_or(0).max(frag.t_end));
        self.partial_until = None;
        self.finals.push(Utterance { text: frag.text.clone(), t_start: frag.t_start, t_end: frag.t_end });
        self.emit(self.clock, EventBody::FragmentIn(frag.clone()));
        if self.full() {
            let promoted = self.chunker.ingest_fragment(frag, self.runner.oracle.as_ref())?;
            if let Some(seg) = promoted {
                self.promote(seg, PromotionCause::TopicShift, self.clock);
            }
        }
        self.advance_to(now);
        Ok(())
    }

    fn advance_to(&mut self, target: Millis) {
        let tick_ms = self.config.params.tick_ms;
        while self.next_tick <= target {
            let t = self.next_tick;
            self.next_tick += tick_ms;
            self.clock = self.clock.max(t);
            self.run_tick(t);
        }
        self.clock = self.clock.max(target);
    }

    /// Speech heard after the buffer, recently enough that the pause is not over.
    fn speech_resumed(&self, t: Millis) -> bool {
        match (self.partial_until, self.chunker.buffer().t_last_end()) {
            (Some(p), Some(last)) => p > last && t.saturating_sub(p) <= self.config.params.pause_ms,
            _ => false,
        }
    }

    fn recent_speech(&self, now: Millis, span: Millis) -> String {
        let from = now.saturating_sub(span);
        text::join_spaced(self.finals.iter().filter(|u| u.t_end > from && u.t_start <= now).map(|u| u.text.as_str()))
    }

    fn run_tick(&mut self, t: Millis) {
        if self.full() && !self.speech_resumed(t) {
            if let Some(seg) = self.chunker.tick(t) {
                self.promote(seg, PromotionCause::Pause, t);
            }
        }
        if let Some(id) = self.tips.expire(t) {
            self.emit(t, EventBody::TipDismissed { id });
        }
        for note_id in self.reminders.expire(t) {
            self.emit(t, EventBody::ReminderHidden { note_id });
        }
        if !self.full() {
            return;
        }
        let tp = self.config.params.tips.clone();
        if t.is_multiple_of(tp.generate_every_ms) {
            let transcript = self.recent_speech(t, tp.candidate_window_ms);
            if !transcript.trim().is_empty() {
                let brief = self.config.brief.clone();
                self.schedule(Job::Tips { transcript, brief }, t);
            }
        }
        if t.is_multiple_of(tp.gate_every_ms) {
            let window = self.recent_speech(t, tp.gate_window_ms);
            if let Some(tip) = self.tips.gate(&window, t, self.runner.oracle.as_ref()) {
                self.emit(t, EventBody::TipShown { tip, nudge: false });
            }
        }
        if let Some(last) = self.t_last_speech {
            if let Some(tip) = self.tips.pause_nudge(t, last) {
                self.emit(t, EventBody::TipShown { tip, nudge: true });
            }
        }
        let rp = *self.reminders.params();
        if t.is_multiple_of(rp.every_ms) {
            let window = self.recent_speech(t, rp.window_ms);
            let found = self.reminders.find_related(&window, self.notes.values(), t, self.runner.oracle.as_ref());
            for reminder in found {
                let summary = self.notes.get(&reminder.note_id).and_then(|n| n.summary.clone());
                self.emit(t, EventBody::ReminderShown { reminder, summary });
            }
        }
    }

    fn promote(&mut self, segment: PromotedSegment, cause: PromotionCause, t: Millis) {
        let id = NoteId(self.next_note);
        self.next_note += 1;
        let note = notes::create_note(id, &segment, &self.store, self.view, self.canvas.center());
        self.notes.insert(id, note.clone());
        self.order.push(id);
        self.revisions.insert(id, 0);
        self.emit(t, EventBody::NoteCreated { note: note.clone(), cause });
        for tip_id in self.tips.responses_for(&note, &self.lexicon) {
            let explicit = self.tips.acked(tip_id);
            if self.tips.record_response(tip_id, id).is_ok() {
                self.emit(t, EventBody::TipResponse { tip_id, note_id: id, explicit });
            }
        }
        self.schedule(Job::Enrich { note, revision: 0 }, t);
    }

    fn schedule(&mut self, job: Job, t: Millis) {
        match self.job_mode {
            JobMode::Inline => {
                let outcome = self.runner.run(&job, &mut |_| {});
                self.apply(outcome, t);
            }
            JobMode::Deferred => self.jobs.push_back(job),
        }
    }

    /// Jobs queued since the last call, for the host to run.
    pub fn take_jobs(&mut self) -> Vec<Job> {
        self.jobs.drain(..).collect()
    }

    /// Applies a job result that arrived at `now`. Accepted after the session
    /// ended so in-flight enrichments still land.
    pub fn complete(&mut self, outcome: JobOutcome, now: Millis) -> Vec<SessionEvent> {
        let mark = self.log.len();
        if !self.ended {
            self.advance_to(now);
        }
        let t = self.clock.max(now);
        self.apply(outcome, t);
        self.since(mark)
    }

    fn apply(&mut self, outcome: JobOutcome, t: Millis) {
        match outcome {
            JobOutcome::TipDrafts(drafts) => {
                let tips = self.tips.pool_drafts(drafts, t);
                if !tips.is_empty() {
                    self.emit(t, EventBody::TipCandidates { tips });
                }
            }
            JobOutcome::Enriched { id, revision, enrichment, linked } => {
                self.apply_enrichment(id, revision, enrichment, linked, t)
            }
        }
    }

    fn apply_enrichment(
        &mut self,
        id: NoteId,
        revision: u64,
        enrichment: Enrichment,
        linked: BTreeSet<String>,
        t: Millis,
    ) {
        if self.revisions.get(&id) != Some(&revision) {
            return;
        }
        let Some(note) = self.notes.get_mut(&id) else { return };
        // a result is consumed once
        *self.revisions.entry(id).or_insert(0) += 1;
        enrichment.apply(note);
        note.linked_elements = linked.clone();
        let threaded = note.thread_id.is_some();
        self.emit(t, EventBody::NoteEnriched { id, enrichment, linked_elements: linked });
        if threaded {
            return;
        }
        if self.merge_checked.insert(id) && self.try_merge_into_previous(id, t) {
            return;
        }
        let note = self.notes[&id].clone();
        let (thread_id, created) = self.threader.assign(&note, &self.notes, self.runner.oracle.as_ref());
        if let Some(n) = self.notes.get_mut(&id) {
            n.thread_id = Some(thread_id);
        }
        let thread = self.threader.get(thread_id).cloned().expect("assigned thread exists");
        self.emit(t, EventBody::ThreadAssigned { note_id: id, thread, created });
    }

    fn try_merge_into_previous(&mut self, id: NoteId, t: Millis) -> bool {
        let Some(pos) = self.order.iter().position(|n| *n == id) else { return false };
        if pos == 0 {
            return false;
        }
        let prev_id = self.order[pos - 1];
        let (prev, new) = (&self.notes[&prev_id], &self.notes[&id]);
        let ctx = AnchorContext {
            canvas_center: self.canvas.center(),
            view: new.anchor.view,
            last_known: self.store.last_before(prev.t_start),
        };
        let window = self.config.params.merge_window_ms;
        let MergeOutcome::Merged(merged) = notes::try_merge(prev, new, self.runner.oracle.as_ref(), &ctx, window)
        else {
            return false;
        };
        self.notes.remove(&id);
        self.order.remove(pos);
        self.revisions.remove(&id);
        self.reminders.forget(id);
        if let Some(thread) = merged.thread_id {
            self.threader.touch(thread, merged.t_end);
        }
        self.notes.insert(prev_id, merged.clone());
        let revision = {
            let r = self.revisions.entry(prev_id).or_insert(0);
            *r += 1;
            *r
        };
        self.emit(t, EventBody::NoteMerged { into: prev_id, from: id, note: merged.clone() });
        self.schedule(Job::Enrich { note: merged, revision }, t);
        true
    }

    /// Structural checks that hold between inputs. With jobs still pending,
    /// notes may legitimately be unthreaded.
    pub fn check_invariants(&self) -> Result<(), String> {
        for note in self.notes.values() {
            note.validate().map_err(|e| format!("{}: {e}", note.id))?;
            if let Some(th) = note.thread_id {
                let thread = self.threader.get(th).ok_or_else(|| format!("{} points at missing {th}", note.id))?;
                if !thread.note_ids.contains(&note.id) {
                    return Err(format!("{} not listed in {th}", note.id));
                }
            } else if self.jobs.is_empty() && self.job_mode == JobMode::Inline {
                return Err(format!("{} has no thread", note.id));
            }
        }
        let mut seen = BTreeSet::new();
        for thread in self.threader.threads() {
            if thread.note_ids.is_empty() {
                return Err(format!("{} is empty", thread.id));
            }
            for id in &thread.note_ids {
                if !seen.insert(*id) {
                    return Err(format!("{id} is in two threads"));
                }
                match self.notes.get(id) {
                    Some(n) if n.thread_id == Some(thread.id) => {}
                    _ => return Err(format!("{} lists {id}, which is not its live member", thread.id)),
                }
            }
        }
        let mut shown: Vec<Millis> = self.tips.shown().filter_map(|t| t.shown_t).collect();
        shown.sort_unstable();
        let gap = self.config.params.tips.min_gap_ms;
        if shown.windows(2).any(|w| w[1] - w[0] < gap) {
            return Err("two tips shown closer than the minimum gap".into());
        }
        Ok(())
    }
}
