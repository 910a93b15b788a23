use std::sync::Arc;
use std::time::Duration;

use axum::body::{to_bytes, Body};
use axum::http::{Request, StatusCode};
use axum::Router;
use futures::{SinkExt, StreamExt};
use serde_json::{json, Value};
use thinkaloud_core::event::{parse_jsonl, read_log_file, EventBody};
use thinkaloud_core::synth::synth_config;
use thinkaloud_core::{Mode, RuleOracle};
use thinkaloud_server::session::{Clock, ManualClock};
use thinkaloud_server::{router, AppState, Frame};
use tokio::net::TcpStream;
use tokio_tungstenite::tungstenite::Message;
use tokio_tungstenite::{MaybeTlsStream, WebSocketStream};
use tower::ServiceExt;

struct Harness {
    app: Router,
    clock: Arc<ManualClock>,
    dir: tempfile::TempDir,
}

fn harness() -> Harness {
    let dir = tempfile::tempdir().unwrap();
    let clock = Arc::new(ManualClock::default());
    let shared = clock.clone();
    let state = AppState::new(Arc::new(RuleOracle::default()), Some(dir.path().to_path_buf()))
        .with_clock(Arc::new(move || shared.clone() as Arc<dyn Clock>), Duration::from_millis(10));
    Harness { app: router(state), clock, dir }
}

async fn call(app: &Router, method: &str, uri: &str, body: Option<Value>) -> (StatusCode, Vec<u8>) {
    let req = Request::builder().method(method).uri(uri);
    let req = match body {
        Some(v) => req.header("content-type", "application/json").body(Body::from(v.to_string())),
        None => req.body(Body::empty()),
    }
    .unwrap();
    let resp = app.clone().oneshot(req).await.unwrap();
    let status = resp.status();
    (status, to_bytes(resp.into_body(), usize::MAX).await.unwrap().to_vec())
}

async fn open(app: &Router, mode: Mode) -> String {
    let cfg = serde_json::to_value(synth_config(mode)).unwrap();
    let (status, body) = call(app, "POST", "/session", Some(cfg)).await;
    assert_eq!(status, StatusCode::CREATED);
    let v: Value = serde_json::from_slice(&body).unwrap();
    v["id"].as_str().unwrap().to_string()
}

#[tokio::test]
async fn healthz() {
    let h = harness();
    let (status, body) = call(&h.app, "GET", "/healthz", None).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(body, b"ok");
}

#[tokio::test]
async fn open_session_validates_config() {
    let h = harness();
    let mut cfg = serde_json::to_value(synth_config(Mode::Full)).unwrap();
    cfg.as_object_mut().unwrap().remove("canvas");
    let (status, body) = call(&h.app, "POST", "/session", Some(cfg)).await;
    assert_eq!(status, StatusCode::UNPROCESSABLE_ENTITY);
    let v: Value = serde_json::from_slice(&body).unwrap();
    assert_eq!(v["field"], "canvas");

    let (status, _) = call(&h.app, "POST", "/session", Some(json!({"mode": "pointing"}))).await;
    assert_eq!(status, StatusCode::BAD_REQUEST);

    let id = open(&h.app, Mode::Baseline).await;
    let log = read_log_file(&h.dir.path().join(format!("{id}.events.jsonl"))).unwrap();
    assert!(matches!(log[0].body, EventBody::Config(_)));
}

#[tokio::test]
async fn queries_reject_unknown_sessions_and_labels() {
    let h = harness();
    for path in ["/session/nope/notes", "/session/nope/threads", "/session/nope/log"] {
        assert_eq!(call(&h.app, "GET", path, None).await.0, StatusCode::NOT_FOUND, "{path}");
    }
    let id = open(&h.app, Mode::Full).await;
    let (status, _) = call(&h.app, "GET", &format!("/session/{id}/notes?labels=vibes"), None).await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
    let (status, body) = call(&h.app, "GET", &format!("/session/{id}/notes"), None).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(serde_json::from_slice::<Value>(&body).unwrap(), json!([]));
}

type Ws = WebSocketStream<MaybeTlsStream<TcpStream>>;

async fn serve(app: Router) -> std::net::SocketAddr {
    let listener = tokio::net::TcpListener::bind("127.0.0.1:0").await.unwrap();
    let addr = listener.local_addr().unwrap();
    tokio::spawn(async move { axum::serve(listener, app).await.unwrap() });
    addr
}

async fn connect(addr: std::net::SocketAddr, id: &str) -> Ws {
    let (ws, _) = tokio_tungstenite::connect_async(format!("ws://{addr}/session/{id}/stream")).await.unwrap();
    ws
}

async fn send(ws: &mut Ws, v: Value) {
    ws.send(Message::Text(v.to_string().into())).await.unwrap();
}

/// Reads frames until one of `kind` arrives, returning everything read.
async fn until(ws: &mut Ws, kind: &str) -> Vec<Frame> {
    let mut seen = Vec::new();
    let read = async {
        while let Some(msg) = ws.next().await {
            if let Message::Text(t) = msg.unwrap() {
                let f: Frame = serde_json::from_str(t.as_str()).unwrap();
                let done = f.kind == kind;
                seen.push(f);
                if done {
                    return;
                }
            }
        }
    };
    tokio::time::timeout(Duration::from_secs(5), read)
        .await
        .unwrap_or_else(|_| panic!("no {kind} frame; saw {:?}", seen.iter().map(|f| &f.kind).collect::<Vec<_>>()));
    seen
}

fn kinds(frames: &[Frame]) -> Vec<&str> {
    frames.iter().map(|f| f.kind.as_str()).collect()
}

#[tokio::test]
async fn live_stream_projects_the_log() {
    let h = harness();
    let id = open(&h.app, Mode::Full).await;
    let addr = serve(h.app.clone()).await;
    let mut ws = connect(addr, &id).await;

    h.clock.set(3200);
    send(&mut ws, json!({"type": "pointer", "x": 120.0, "y": 100.0, "t": 1500, "view": "2d"})).await;
    send(&mut ws, json!({"type": "fragment", "text": "the kitchen counter and pantry", "t_start": 1000, "t_end": 3000, "is_final": true})).await;
    let first = until(&mut ws, "talkviz").await;
    assert_eq!(kinds(&first), ["talktext", "talkviz"]);
    assert_eq!(first[1].payload["signal"], "boundary");

    send(&mut ws, json!({"type": "pointer", "x": "left"})).await;
    let err = until(&mut ws, "error").await;
    assert!(err.last().unwrap().seq.is_none());
    send(&mut ws, json!({"type": "wave"})).await;
    until(&mut ws, "error").await;

    h.clock.set(12_000);
    let frames = until(&mut ws, "thread_updated").await;
    let k = kinds(&frames);
    let pos = |s: &str| k.iter().position(|x| *x == s).unwrap();
    assert!(pos("talkviz") < pos("note_created"));
    assert!(pos("note_created") < pos("note_enriched") && pos("note_enriched") < pos("thread_updated"));

    send(&mut ws, json!({"type": "note_checked", "id": 99})).await;
    assert!(until(&mut ws, "error").await.last().unwrap().payload["message"].as_str().unwrap().contains("n99"));
    send(&mut ws, json!({"type": "note_checked", "id": 1})).await;

    let (status, body) = call(&h.app, "GET", &format!("/session/{id}/threads"), None).await;
    assert_eq!(status, StatusCode::OK);
    let threads: Value = serde_json::from_slice(&body).unwrap();
    assert_eq!(threads.as_array().unwrap().len(), 1);
    let (_, body) = call(&h.app, "GET", &format!("/session/{id}/notes?labels=process,problem"), None).await;
    let groups: Value = serde_json::from_slice(&body).unwrap();
    assert!(groups.as_array().is_some());

    send(&mut ws, json!({"type": "end"})).await;
    send(&mut ws, json!({"type": "end"})).await;
    assert!(until(&mut ws, "error").await.last().unwrap().payload["message"].as_str().unwrap().contains("ended"));

    let (status, body) = call(&h.app, "GET", &format!("/session/{id}/log"), None).await;
    assert_eq!(status, StatusCode::OK);
    let text = String::from_utf8(body).unwrap();
    let log = parse_jsonl(&text).unwrap();
    let persisted = std::fs::read_to_string(h.dir.path().join(format!("{id}.events.jsonl"))).unwrap();
    assert!(text.starts_with(&persisted) || persisted.starts_with(&text));
    assert!(log.iter().any(|e| matches!(e.body, EventBody::NoteChecked { .. })));
    assert!(log.iter().any(|e| matches!(e.body, EventBody::FilterApplied { .. })));
    assert_eq!(log.iter().filter(|e| matches!(e.body, EventBody::FragmentIn(_))).count(), 1);
    for f in frames.iter().filter(|f| f.seq.is_some()) {
        let ev = log.iter().find(|e| Some(e.seq) == f.seq).expect("frame seq is in the log");
        assert_eq!(ev.t, f.t);
    }
}

#[tokio::test]
async fn baseline_streams_text_only() {
    let h = harness();
    let id = open(&h.app, Mode::Baseline).await;
    let addr = serve(h.app.clone()).await;
    let mut ws = connect(addr, &id).await;
    h.clock.set(2000);
    send(
        &mut ws,
        json!({"type": "fragment", "text": "move the kitchen", "t_start": 0, "t_end": 900, "is_final": false}),
    )
    .await;
    send(&mut ws, json!({"type": "fragment", "text": "so move the kitchen wall over there", "t_start": 0, "t_end": 1800, "is_final": true})).await;
    let a = until(&mut ws, "talktext").await;
    let b = until(&mut ws, "talktext").await;
    assert_eq!(b[0].payload["text"], "move the kitchen wall over there");
    assert_eq!(a[0].payload["is_final"], false);
    h.clock.set(40_000);
    tokio::time::sleep(Duration::from_millis(100)).await;
    send(&mut ws, json!({"type": "end"})).await;
    tokio::time::sleep(Duration::from_millis(100)).await;
    let (_, body) = call(&h.app, "GET", &format!("/session/{id}/log"), None).await;
    let log = parse_jsonl(std::str::from_utf8(&body).unwrap()).unwrap();
    assert!(log.iter().all(|e| e.body.is_input()));
    assert!(matches!(log.last().unwrap().body, EventBody::SessionEnd {}));
}
