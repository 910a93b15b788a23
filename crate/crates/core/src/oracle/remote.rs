//! Chat-completion backed oracle.
//!
//! Each oracle call becomes one request with a JSON-schema response format.
//! The reply is parsed and checked against the inputs it refers to; anything
//! late, malformed or inconsistent surfaces as an [`OracleError`] so the
//! engine can fall back to the degraded result.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;
use std::sync::{mpsc, Arc};
use std::thread;
use std::time::Duration;

use base64::Engine as _;
use serde::de::DeserializeOwned;
use serde::Deserialize;
use serde_json::{json, Value};

use super::{ElementLinkRequest, NoteDigest, SemanticOracle, SplitVerdict, TipDraft};
use crate::error::OracleError;
use crate::model::{ActionSuggestion, NoteId, ProcessLabel, TalkTip, TipCategory, TipId, MAX_ACTIONS, TIP_TEXT_MAX};

pub const OPS: [&str; 10] = [
    "judge_split",
    "summarize",
    "classify_labels",
    "suggest_actions",
    "merge_check",
    "thread_affinity",
    "tip_candidates",
    "tip_gate",
    "related_notes",
    "element_link",
];

/// Prompt templates keyed by op name, plus the shared system prompt.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PromptSet {
    pub system: String,
    templates: BTreeMap<String, String>,
}

impl Default for PromptSet {
    fn default() -> Self {
        let builtin = [
            ("judge_split", include_str!("../../assets/prompts/judge_split.txt")),
            ("summarize", include_str!("../../assets/prompts/summarize.txt")),
            ("classify_labels", include_str!("../../assets/prompts/classify_labels.txt")),
            ("suggest_actions", include_str!("../../assets/prompts/suggest_actions.txt")),
            ("merge_check", include_str!("../../assets/prompts/merge_check.txt")),
            ("thread_affinity", include_str!("../../assets/prompts/thread_affinity.txt")),
            ("tip_candidates", include_str!("../../assets/prompts/tip_candidates.txt")),
            ("tip_gate", include_str!("../../assets/prompts/tip_gate.txt")),
            ("related_notes", include_str!("../../assets/prompts/related_notes.txt")),
            ("element_link", include_str!("../../assets/prompts/element_link.txt")),
        ];
        Self {
            system: include_str!("../../assets/prompts/system.txt").trim().to_string(),
            templates: builtin.into_iter().map(|(k, v)| (k.to_string(), v.to_string())).collect(),
        }
    }
}

impl PromptSet {
    /// Built-in templates overridden by any `<op>.txt` / `system.txt` found in `dir`.
    pub fn load_dir(dir: &Path) -> std::io::Result<Self> {
        let mut set = Self::default();
        let system = dir.join("system.txt");
        if system.exists() {
            set.system = std::fs::read_to_string(system)?.trim().to_string();
        }
        for op in OPS {
            let path = dir.join(format!("{op}.txt"));
            if path.exists() {
                set.templates.insert(op.to_string(), std::fs::read_to_string(path)?);
            }
        }
        Ok(set)
    }

    pub fn render(&self, op: &str, vars: &[(&str, &str)]) -> String {
        let mut out = self.templates.get(op).cloned().unwrap_or_default();
        for (k, v) in vars {
            out = out.replace(&format!("{{{{{k}}}}}"), v);
        }
        out
    }
}

/// One outgoing chat-completion request.
#[derive(Debug, Clone, PartialEq)]
pub struct ChatRequest {
    pub op: &'static str,
    pub body: Value,
}

/// Sends a request and returns the raw response body.
pub trait Transport: Send + Sync + 'static {
    fn send(&self, request: &ChatRequest) -> Result<String, OracleError>;
}

#[derive(Debug, Clone)]
pub struct RemoteConfig {
    pub model: String,
    pub timeout: Duration,
    pub prompts: PromptSet,
}

impl Default for RemoteConfig {
    fn default() -> Self {
        Self { model: "gpt-4o".to_string(), timeout: Duration::from_secs(2), prompts: PromptSet::default() }
    }
}

/// Oracle backed by a chat-completion endpoint reached through `T`.
pub struct RemoteOracle<T: Transport> {
    transport: Arc<T>,
    config: RemoteConfig,
}

impl<T: Transport> RemoteOracle<T> {
    pub fn new(transport: T, config: RemoteConfig) -> Self {
        Self { transport: Arc::new(transport), config }
    }

    fn request(&self, op: &'static str, user: String, schema: Value, image_png: Option<&[u8]>) -> ChatRequest {
        let content = match image_png {
            Some(png) => {
                let b64 = base64::engine::general_purpose::STANDARD.encode(png);
                json!([
                    {"type": "text", "text": user},
                    {"type": "image_url", "image_url": {"url": format!("data:image/png;base64,{b64}")}}
                ])
            }
            None => Value::String(user),
        };
        ChatRequest {
            op,
            body: json!({
                "model": self.config.model,
                "messages": [
                    {"role": "system", "content": self.config.prompts.system},
                    {"role": "user", "content": content},
                ],
                "response_format": {
                    "type": "json_schema",
                    "json_schema": {"name": op, "strict": true, "schema": schema},
                },
            }),
        }
    }

    /// Sends on a helper thread so a stuck transport cannot outlive the timeout.
    fn call<R: DeserializeOwned>(&self, request: ChatRequest) -> Result<R, OracleError> {
        let (tx, rx) = mpsc::channel();
        let transport = Arc::clone(&self.transport);
        thread::spawn(move || {
            let _ = tx.send(transport.send(&request));
        });
        let body = match rx.recv_timeout(self.config.timeout) {
            Ok(res) => res?,
            Err(mpsc::RecvTimeoutError::Timeout) => return Err(OracleError::Timeout),
            Err(mpsc::RecvTimeoutError::Disconnected) => {
                return Err(OracleError::Transport("transport thread died".into()))
            }
        };
        parse_completion(&body)
    }

    fn render(&self, op: &str, vars: &[(&str, &str)]) -> String {
        self.config.prompts.render(op, vars)
    }
}

/// Extracts `choices[0].message.content` and decodes it as `R`.
fn parse_completion<R: DeserializeOwned>(body: &str) -> Result<R, OracleError> {
    let envelope: Value = serde_json::from_str(body).map_err(|e| OracleError::Schema(e.to_string()))?;
    let content = envelope
        .pointer("/choices/0/message/content")
        .and_then(Value::as_str)
        .ok_or_else(|| OracleError::Schema("missing choices[0].message.content".into()))?;
    serde_json::from_str(content).map_err(|e| OracleError::Schema(e.to_string()))
}

fn schema(properties: Value, required: &[&str]) -> Value {
    json!({"type": "object", "properties": properties, "required": required, "additionalProperties": false})
}

fn schema_err(msg: impl Into<String>) -> OracleError {
    OracleError::Schema(msg.into())
}

#[derive(Deserialize)]
struct SplitReply {
    verdict: SplitVerdict,
}
#[derive(Deserialize)]
struct SummaryReply {
    summary: String,
}
#[derive(Deserialize)]
struct LabelsReply {
    labels: Vec<String>,
}
#[derive(Deserialize)]
struct ActionsReply {
    actions: Vec<String>,
}
#[derive(Deserialize)]
struct MergeReply {
    merge: bool,
}
#[derive(Deserialize)]
struct AffinityReply {
    affinity: f64,
}
#[derive(Deserialize)]
struct TipsReply {
    tips: Vec<TipDraft>,
}
#[derive(Deserialize)]
struct GateReply {
    tip_id: Option<u64>,
}
#[derive(Deserialize)]
struct RelatedReply {
    note_ids: Vec<u64>,
}
#[derive(Deserialize)]
struct LinkReply {
    element_ids: Vec<String>,
}

impl<T: Transport> SemanticOracle for RemoteOracle<T> {
    fn wants_image(&self) -> bool {
        true
    }

    fn judge_split(&self, buffer: &str, fragment: &str) -> Result<SplitVerdict, OracleError> {
        let user = self.render("judge_split", &[("buffer", buffer), ("fragment", fragment)]);
        let s = schema(json!({"verdict": {"type": "string", "enum": ["CONTINUE", "NEW_TOPIC"]}}), &["verdict"]);
        let reply: SplitReply = self.call(self.request("judge_split", user, s, None))?;
        Ok(reply.verdict)
    }

    fn summarize(&self, transcript: &str) -> Result<String, OracleError> {
        let user = self.render("summarize", &[("transcript", transcript)]);
        let s = schema(json!({"summary": {"type": "string"}}), &["summary"]);
        let reply: SummaryReply = self.call(self.request("summarize", user, s, None))?;
        let summary = reply.summary.trim();
        if summary.is_empty() {
            return Err(schema_err("empty summary"));
        }
        Ok(crate::text::truncate_chars(summary, TIP_TEXT_MAX))
    }

    fn classify_labels(&self, transcript: &str) -> Result<BTreeSet<ProcessLabel>, OracleError> {
        let user = self.render("classify_labels", &[("transcript", transcript)]);
        let names: Vec<&str> = ProcessLabel::ALL.iter().map(|l| l.as_str()).collect();
        let s = schema(
            json!({"labels": {"type": "array", "items": {"type": "string", "enum": names}, "minItems": 1}}),
            &["labels"],
        );
        let reply: LabelsReply = self.call(self.request("classify_labels", user, s, None))?;
        let labels = reply
            .labels
            .iter()
            .map(|l| l.parse::<ProcessLabel>().map_err(|e| schema_err(e.to_string())))
            .collect::<Result<BTreeSet<_>, _>>()?;
        if labels.is_empty() {
            return Err(schema_err("no labels"));
        }
        Ok(labels)
    }

    fn suggest_actions(
        &self,
        transcript: &str,
        labels: &BTreeSet<ProcessLabel>,
    ) -> Result<Vec<ActionSuggestion>, OracleError> {
        let label_list = labels.iter().map(|l| l.as_str()).collect::<Vec<_>>().join(", ");
        let user = self.render("suggest_actions", &[("transcript", transcript), ("labels", &label_list)]);
        let s = schema(
            json!({"actions": {"type": "array", "items": {"type": "string", "maxLength": 40}, "maxItems": MAX_ACTIONS}}),
            &["actions"],
        );
        let reply: ActionsReply = self.call(self.request("suggest_actions", user, s, None))?;
        if reply.actions.len() > MAX_ACTIONS {
            return Err(schema_err("more than three actions"));
        }
        reply.actions.into_iter().map(|a| ActionSuggestion::new(a).map_err(|e| schema_err(e.to_string()))).collect()
    }

    fn merge_check(&self, prev: &str, new: &str) -> Result<bool, OracleError> {
        let user = self.render("merge_check", &[("prev", prev), ("new", new)]);
        let s = schema(json!({"merge": {"type": "boolean"}}), &["merge"]);
        let reply: MergeReply = self.call(self.request("merge_check", user, s, None))?;
        Ok(reply.merge)
    }

    fn thread_affinity(&self, note: &str, thread_context: &str) -> Result<f64, OracleError> {
        let user = self.render("thread_affinity", &[("note", note), ("thread", thread_context)]);
        let s = schema(json!({"affinity": {"type": "number", "minimum": 0, "maximum": 1}}), &["affinity"]);
        let reply: AffinityReply = self.call(self.request("thread_affinity", user, s, None))?;
        if !(0.0..=1.0).contains(&reply.affinity) {
            return Err(schema_err(format!("affinity {} outside [0, 1]", reply.affinity)));
        }
        Ok(reply.affinity)
    }

    fn tip_candidates(&self, recent_transcript: &str, brief: &str) -> Result<Vec<TipDraft>, OracleError> {
        let user = self.render("tip_candidates", &[("transcript", recent_transcript), ("brief", brief)]);
        let s = schema(
            json!({"tips": {"type": "array", "maxItems": 3, "items": {
                "type": "object",
                "properties": {
                    "category": {"type": "string", "enum": ["potential_issue", "new_idea", "probing_question"]},
                    "text": {"type": "string", "maxLength": TIP_TEXT_MAX},
                },
                "required": ["category", "text"],
                "additionalProperties": false,
            }}}),
            &["tips"],
        );
        let reply: TipsReply = self.call(self.request("tip_candidates", user, s, None))?;
        let mut seen: BTreeSet<TipCategory> = BTreeSet::new();
        for tip in &reply.tips {
            let n = tip.text.trim().chars().count();
            if n == 0 || n > TIP_TEXT_MAX {
                return Err(schema_err("tip text must be 1..=80 characters"));
            }
            if !seen.insert(tip.category) {
                return Err(schema_err("two tips share a category"));
            }
        }
        Ok(reply.tips)
    }

    fn tip_gate(&self, pool: &[TalkTip], window: &str) -> Result<Option<TipId>, OracleError> {
        let listing: String = pool.iter().map(|t| format!("- id {}: {}\n", t.id.0, t.text)).collect();
        let user = self.render("tip_gate", &[("window", window), ("pool", &listing)]);
        let s = schema(json!({"tip_id": {"type": ["integer", "null"]}}), &["tip_id"]);
        let reply: GateReply = self.call(self.request("tip_gate", user, s, None))?;
        match reply.tip_id {
            None => Ok(None),
            Some(id) if pool.iter().any(|t| t.id.0 == id) => Ok(Some(TipId(id))),
            Some(id) => Err(schema_err(format!("tip {id} is not in the pool"))),
        }
    }

    fn related_notes(&self, window: &str, notes: &[NoteDigest]) -> Result<Vec<NoteId>, OracleError> {
        let listing: String = notes
            .iter()
            .map(|n| format!("- id {}: {}\n", n.id.0, n.summary.as_deref().unwrap_or(&n.transcript)))
            .collect();
        let user = self.render("related_notes", &[("window", window), ("notes", &listing)]);
        let s = schema(json!({"note_ids": {"type": "array", "items": {"type": "integer"}}}), &["note_ids"]);
        let reply: RelatedReply = self.call(self.request("related_notes", user, s, None))?;
        let known: BTreeSet<u64> = notes.iter().map(|n| n.id.0).collect();
        if let Some(bad) = reply.note_ids.iter().find(|id| !known.contains(id)) {
            return Err(schema_err(format!("note {bad} was not offered")));
        }
        Ok(reply.note_ids.into_iter().map(NoteId).collect())
    }

    fn element_link(&self, request: &ElementLinkRequest<'_>) -> Result<BTreeSet<String>, OracleError> {
        let scene: String = request.scene.iter().map(|e| format!("- {}: {}\n", e.id, e.name)).collect();
        let user = self.render(
            "element_link",
            &[("transcript", request.transcript), ("timeline", &request.overlay.timeline), ("scene", &scene)],
        );
        let s = schema(json!({"element_ids": {"type": "array", "items": {"type": "string"}}}), &["element_ids"]);
        let reply: LinkReply = self.call(self.request("element_link", user, s, request.image_png))?;
        let known: BTreeSet<&str> = request.scene.iter().map(|e| e.id.as_str()).collect();
        if let Some(bad) = reply.element_ids.iter().find(|id| !known.contains(id.as_str())) {
            return Err(schema_err(format!("element `{bad}` is not in the scene")));
        }
        Ok(reply.element_ids.into_iter().collect())
    }
}
