use std::collections::{BTreeSet, HashMap};
use std::path::PathBuf;
use std::sync::{Arc, RwLock};
use std::time::Duration;

use axum::body::Bytes;
use axum::extract::ws::{Message, WebSocket, WebSocketUpgrade};
use axum::extract::{Path, Query, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use futures::{SinkExt, StreamExt};
use serde::Deserialize;
use serde_json::json;
use thinkaloud_core::event::log_file_name;
use thinkaloud_core::{ClientMessage, ConfigError, Millis, ProcessLabel, SemanticOracle, SessionConfig};
use tokio::sync::broadcast::error::RecvError;
use tracing::info;

use crate::frames::Frame;
use crate::session::{self, Clock, OpenError, SessionHandle, SessionOptions, WallClock};

pub type ClockFactory = Arc<dyn Fn() -> Arc<dyn Clock> + Send + Sync>;

#[derive(Clone)]
pub struct AppState {
    sessions: Arc<RwLock<HashMap<String, SessionHandle>>>,
    oracle: Arc<dyn SemanticOracle>,
    log_dir: Option<PathBuf>,
    clock: ClockFactory,
    tick: Duration,
}

impl AppState {
    pub fn new(oracle: Arc<dyn SemanticOracle>, log_dir: Option<PathBuf>) -> Self {
        Self {
            sessions: Arc::default(),
            oracle,
            log_dir,
            clock: Arc::new(|| Arc::new(WallClock::start()) as Arc<dyn Clock>),
            tick: Duration::from_millis(200),
        }
    }

    pub fn with_clock(mut self, clock: ClockFactory, tick: Duration) -> Self {
        self.clock = clock;
        self.tick = tick;
        self
    }

    pub fn session(&self, id: &str) -> Option<SessionHandle> {
        self.sessions.read().expect("session map poisoned").get(id).cloned()
    }

    pub fn open(&self, config: SessionConfig) -> Result<SessionHandle, OpenError> {
        let id = uuid::Uuid::new_v4().simple().to_string();
        let opts = SessionOptions {
            oracle: self.oracle.clone(),
            log_path: self.log_dir.as_ref().map(|d| d.join(log_file_name(&id))),
            clock: (self.clock)(),
            tick: self.tick,
        };
        let handle = session::open(id.clone(), config, opts)?;
        self.sessions.write().expect("session map poisoned").insert(id, handle.clone());
        Ok(handle)
    }

    pub fn shutdown(&self) {
        for h in self.sessions.read().expect("session map poisoned").values() {
            h.shutdown();
        }
    }
}

pub fn router(state: AppState) -> Router {
    Router::new()
        .route("/healthz", get(|| async { "ok" }))
        .route("/session", post(open_session))
        .route("/session/{id}/notes", get(notes))
        .route("/session/{id}/threads", get(threads))
        .route("/session/{id}/log", get(log))
        .route("/session/{id}/stream", get(stream))
        .with_state(state)
}

fn error(status: StatusCode, message: impl Into<String>) -> Response {
    (status, Json(json!({ "error": message.into() }))).into_response()
}

fn not_found(id: &str) -> Response {
    error(StatusCode::NOT_FOUND, format!("no session {id}"))
}

fn gone() -> Response {
    error(StatusCode::SERVICE_UNAVAILABLE, "session stopped")
}

async fn open_session(State(st): State<AppState>, body: Bytes) -> Response {
    let config: SessionConfig = match serde_json::from_slice(&body) {
        Ok(c) => c,
        Err(e) => return error(StatusCode::BAD_REQUEST, e.to_string()),
    };
    match st.open(config) {
        Ok(h) => {
            info!(session = %h.id, mode = ?h.mode, "session opened");
            (StatusCode::CREATED, Json(json!({ "id": h.id }))).into_response()
        }
        Err(OpenError::Config(ConfigError::Field { field, message })) => {
            (StatusCode::UNPROCESSABLE_ENTITY, Json(json!({ "error": format!("{field}: {message}"), "field": field })))
                .into_response()
        }
        Err(e) => error(StatusCode::INTERNAL_SERVER_ERROR, e.to_string()),
    }
}

#[derive(Debug, Deserialize)]
struct NotesQuery {
    /// Comma-separated label names.
    labels: Option<String>,
}

async fn notes(State(st): State<AppState>, Path(id): Path<String>, Query(q): Query<NotesQuery>) -> Response {
    let Some(h) = st.session(&id) else { return not_found(&id) };
    let mut labels = BTreeSet::new();
    for name in q.labels.iter().flat_map(|s| s.split(',')).map(str::trim).filter(|s| !s.is_empty()) {
        match name.parse::<ProcessLabel>() {
            Ok(l) => {
                labels.insert(l);
            }
            Err(e) => return error(StatusCode::BAD_REQUEST, e.to_string()),
        }
    }
    match h.notes(labels).await {
        Ok(groups) => Json(groups).into_response(),
        Err(_) => gone(),
    }
}

async fn threads(State(st): State<AppState>, Path(id): Path<String>) -> Response {
    let Some(h) = st.session(&id) else { return not_found(&id) };
    match h.threads().await {
        Ok(t) => Json(t).into_response(),
        Err(_) => gone(),
    }
}

async fn log(State(st): State<AppState>, Path(id): Path<String>) -> Response {
    let Some(h) = st.session(&id) else { return not_found(&id) };
    match h.log().await {
        Ok(text) => ([(header::CONTENT_TYPE, "application/x-ndjson")], text).into_response(),
        Err(_) => gone(),
    }
}

async fn stream(ws: WebSocketUpgrade, State(st): State<AppState>, Path(id): Path<String>) -> Response {
    let Some(h) = st.session(&id) else { return not_found(&id) };
    ws.on_upgrade(move |socket| run_stream(socket, h))
}

async fn run_stream(socket: WebSocket, h: SessionHandle) {
    let mut frames = h.subscribe();
    let (mut sink, mut incoming) = socket.split();
    let mut last_t: Millis = 0;
    loop {
        let out = tokio::select! {
            msg = incoming.next() => match msg {
                Some(Ok(Message::Text(text))) => match serde_json::from_str::<ClientMessage>(text.as_str()) {
                    Err(e) => Some(Frame::error(last_t, format!("bad message: {e}"))),
                    Ok(msg) => match h.send(msg).await {
                        Ok(Ok(())) => None,
                        Ok(Err(e)) => Some(Frame::error(last_t, e.to_string())),
                        Err(_) => break,
                    },
                },
                Some(Ok(Message::Binary(_))) => Some(Frame::error(last_t, "binary frames are not supported")),
                Some(Ok(Message::Close(_))) | Some(Err(_)) | None => break,
                Some(Ok(_)) => None,
            },
            frame = frames.recv() => match frame {
                Ok(f) => {
                    last_t = f.t;
                    Some(f)
                }
                Err(RecvError::Lagged(n)) => Some(Frame::error(last_t, format!("{n} frames dropped"))),
                Err(RecvError::Closed) => break,
            },
        };
        if let Some(frame) = out {
            let text = serde_json::to_string(&frame).expect("frames serialize");
            if sink.send(Message::Text(text.into())).await.is_err() {
                break;
            }
        }
    }
}
