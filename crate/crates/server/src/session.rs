//! One thread per session owns the engine. Everything that touches session
//! state goes through its command channel, so mutations are serialized.
//! Oracle jobs run on a companion worker thread and come back as commands.

use std::collections::BTreeSet;
use std::path::PathBuf;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{mpsc, Arc};
use std::thread;
use std::time::{Duration, Instant};

use thinkaloud_core::event::{LogWriter, SessionEvent};
use thinkaloud_core::{
    ClientMessage, ConfigError, Engine, EngineError, Job, JobMode, JobOutcome, Millis, Mode, ProcessLabel,
    SemanticOracle, SessionConfig, TalkThread, ThreadGroup,
};
use thiserror::Error;
use tokio::sync::{broadcast, oneshot};
use tracing::{debug, warn};

use crate::frames::{project, Frame};

const FRAME_BUFFER: usize = 1024;

/// Session time in milliseconds since the session opened.
pub trait Clock: Send + Sync {
    fn now_ms(&self) -> Millis;
}

pub struct WallClock(Instant);

impl WallClock {
    pub fn start() -> Self {
        WallClock(Instant::now())
    }
}

impl Clock for WallClock {
    fn now_ms(&self) -> Millis {
        self.0.elapsed().as_millis() as Millis
    }
}

/// A clock moved by hand, for tests.
#[derive(Default)]
pub struct ManualClock(AtomicU64);

impl ManualClock {
    pub fn set(&self, t: Millis) {
        self.0.store(t, Ordering::SeqCst);
    }
}

impl Clock for ManualClock {
    fn now_ms(&self) -> Millis {
        self.0.load(Ordering::SeqCst)
    }
}

pub enum Command {
    Client { msg: ClientMessage, reply: oneshot::Sender<Result<(), EngineError>> },
    Notes { labels: BTreeSet<ProcessLabel>, reply: oneshot::Sender<Vec<ThreadGroup>> },
    Threads { reply: oneshot::Sender<Vec<TalkThread>> },
    Log { reply: oneshot::Sender<String> },
    JobDone(JobOutcome),
    Shutdown,
}

#[derive(Debug, Error)]
pub enum OpenError {
    #[error("invalid config: {0}")]
    Config(#[from] ConfigError),
    #[error("cannot open session log: {0}")]
    Io(#[from] std::io::Error),
}

/// Cheap handle to a running session.
#[derive(Clone)]
pub struct SessionHandle {
    pub id: String,
    pub mode: Mode,
    tx: mpsc::Sender<Command>,
    frames: broadcast::Sender<Frame>,
}

/// The session thread has stopped.
#[derive(Debug)]
pub struct Gone;

impl SessionHandle {
    pub fn subscribe(&self) -> broadcast::Receiver<Frame> {
        self.frames.subscribe()
    }

    async fn ask<T>(&self, make: impl FnOnce(oneshot::Sender<T>) -> Command) -> Result<T, Gone> {
        let (reply, rx) = oneshot::channel();
        self.tx.send(make(reply)).map_err(|_| Gone)?;
        rx.await.map_err(|_| Gone)
    }

    pub async fn send(&self, msg: ClientMessage) -> Result<Result<(), EngineError>, Gone> {
        self.ask(|reply| Command::Client { msg, reply }).await
    }

    /// Notes grouped by thread. A non-empty filter is logged.
    pub async fn notes(&self, labels: BTreeSet<ProcessLabel>) -> Result<Vec<ThreadGroup>, Gone> {
        self.ask(|reply| Command::Notes { labels, reply }).await
    }

    pub async fn threads(&self) -> Result<Vec<TalkThread>, Gone> {
        self.ask(|reply| Command::Threads { reply }).await
    }

    /// The session log as JSONL.
    pub async fn log(&self) -> Result<String, Gone> {
        self.ask(|reply| Command::Log { reply }).await
    }

    pub fn shutdown(&self) {
        let _ = self.tx.send(Command::Shutdown);
    }
}

pub struct SessionOptions {
    pub oracle: Arc<dyn SemanticOracle>,
    pub log_path: Option<PathBuf>,
    pub clock: Arc<dyn Clock>,
    /// How long the loop waits for input before advancing the clock.
    pub tick: Duration,
}

struct Session {
    engine: Engine,
    writer: Option<LogWriter>,
    persisted: usize,
    frames: broadcast::Sender<Frame>,
    jobs: mpsc::Sender<Job>,
    clock: Arc<dyn Clock>,
}

impl Session {
    /// Persists and broadcasts everything logged since the last call, then
    /// hands queued jobs to the worker.
    fn publish(&mut self) {
        let mode = self.engine.mode();
        let fresh: Vec<SessionEvent> = self.engine.log()[self.persisted..].to_vec();
        self.persisted = self.engine.log().len();
        for ev in &fresh {
            if let Some(w) = self.writer.as_mut() {
                if let Err(e) = w.append(ev) {
                    warn!(error = %e, seq = ev.seq, "log append failed");
                }
            }
            for frame in project(ev, mode) {
                // no subscribers is fine
                let _ = self.frames.send(frame);
            }
        }
        for job in self.engine.take_jobs() {
            let _ = self.jobs.send(job);
        }
    }

    fn on(&mut self, cmd: Command) -> bool {
        let now = self.clock.now_ms();
        match cmd {
            Command::Client { msg, reply } => {
                let res = self.engine.handle(msg, now).map(|_| ());
                self.publish();
                let _ = reply.send(res);
            }
            Command::Notes { labels, reply } => {
                if !labels.is_empty() && !self.engine.is_ended() {
                    let _ = self.engine.handle(ClientMessage::Filter { labels: labels.clone() }, now);
                    self.publish();
                }
                let _ = reply.send(self.engine.query_notes(&labels));
            }
            Command::Threads { reply } => {
                let _ = reply.send(self.engine.threads().to_vec());
            }
            Command::Log { reply } => {
                let _ = reply.send(thinkaloud_core::event::to_jsonl(self.engine.log()));
            }
            Command::JobDone(outcome) => {
                self.engine.complete(outcome, now);
                self.publish();
            }
            Command::Shutdown => return false,
        }
        true
    }
}

pub fn open(id: String, config: SessionConfig, opts: SessionOptions) -> Result<SessionHandle, OpenError> {
    let engine = Engine::new(config, opts.oracle, JobMode::Deferred)?;
    let writer = match &opts.log_path {
        Some(p) => Some(LogWriter::create(p)?),
        None => None,
    };
    let (tx, rx) = mpsc::channel::<Command>();
    let (frames, _) = broadcast::channel(FRAME_BUFFER);
    let (job_tx, job_rx) = mpsc::channel::<Job>();

    let runner = engine.job_runner();
    let results = tx.clone();
    thread::Builder::new().name(format!("jobs-{id}")).spawn(move || {
        for job in job_rx {
            let outcome = runner.run(&job, &mut thread::sleep);
            if results.send(Command::JobDone(outcome)).is_err() {
                break;
            }
        }
    })?;

    let handle = SessionHandle { id: id.clone(), mode: engine.mode(), tx, frames: frames.clone() };
    let mut session = Session { engine, writer, persisted: 0, frames, jobs: job_tx, clock: opts.clock };
    session.publish();
    let tick = opts.tick;
    thread::Builder::new().name(format!("session-{id}")).spawn(move || {
        loop {
            match rx.recv_timeout(tick) {
                Ok(cmd) => {
                    if !session.on(cmd) {
                        break;
                    }
                }
                Err(mpsc::RecvTimeoutError::Timeout) => {
                    let now = session.clock.now_ms();
                    session.engine.advance(now);
                    session.publish();
                }
                Err(mpsc::RecvTimeoutError::Disconnected) => break,
            }
        }
        debug!(session = %id, "session loop stopped");
    })?;
    Ok(handle)
}
