//! Oracle provider selection.

use std::path::Path;
use std::sync::Arc;
use std::time::Duration;

use anyhow::{bail, Context};
use thinkaloud_core::oracle::{ChatRequest, PromptSet, RemoteConfig, RemoteOracle, RuleConfig, Transport};
use thinkaloud_core::{OracleError, RuleOracle, SemanticOracle};

/// Posts chat-completion bodies to an OpenAI-compatible endpoint.
pub struct HttpTransport {
    client: reqwest::blocking::Client,
    endpoint: String,
    api_key: Option<String>,
}

impl HttpTransport {
    pub fn new(endpoint: String, api_key: Option<String>, timeout: Duration) -> anyhow::Result<Self> {
        let client = reqwest::blocking::Client::builder().timeout(timeout).build()?;
        Ok(Self { client, endpoint, api_key })
    }
}

impl Transport for HttpTransport {
    fn send(&self, request: &ChatRequest) -> Result<String, OracleError> {
        let mut req = self.client.post(&self.endpoint).json(&request.body);
        if let Some(key) = &self.api_key {
            req = req.bearer_auth(key);
        }
        let resp = req.send().map_err(|e| {
            if e.is_timeout() {
                OracleError::Timeout
            } else {
                OracleError::Transport(e.to_string())
            }
        })?;
        let status = resp.status();
        let body = resp.text().map_err(|e| OracleError::Transport(e.to_string()))?;
        if status.is_server_error() || status.as_u16() == 429 {
            return Err(OracleError::Unavailable);
        }
        if !status.is_success() {
            return Err(OracleError::Transport(format!("{op}: HTTP {status}", op = request.op)));
        }
        Ok(body)
    }
}

pub struct RemoteSettings {
    pub endpoint: Option<String>,
    pub api_key: Option<String>,
    pub model: String,
    pub prompts_dir: Option<std::path::PathBuf>,
    pub timeout: Duration,
}

pub fn rule_oracle(rules: Option<&Path>) -> anyhow::Result<Arc<dyn SemanticOracle>> {
    let cfg = match rules {
        Some(p) => {
            let src = std::fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
            RuleConfig::from_toml(&src)?
        }
        None => RuleConfig::default(),
    };
    Ok(Arc::new(RuleOracle::new(cfg)?))
}

/// Must be called outside the async runtime: the blocking client owns one.
pub fn remote_oracle(s: RemoteSettings) -> anyhow::Result<Arc<dyn SemanticOracle>> {
    let Some(endpoint) = s.endpoint else {
        bail!("the remote provider needs an endpoint URL");
    };
    let prompts = match &s.prompts_dir {
        Some(dir) => PromptSet::load_dir(dir).with_context(|| format!("loading prompts from {}", dir.display()))?,
        None => PromptSet::default(),
    };
    let transport = HttpTransport::new(endpoint, s.api_key, s.timeout)?;
    let config = RemoteConfig { model: s.model, timeout: s.timeout, prompts };
    Ok(Arc::new(RemoteOracle::new(transport, config)))
}
