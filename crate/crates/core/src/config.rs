use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::error::ConfigError;
use crate::model::{Millis, SceneElement};
use crate::reminders::ReminderParams;
use crate::threader::ThreadParams;
use crate::tips::TipParams;

/// Full pipeline, or live transcription only.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    #[default]
    Full,
    Baseline,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Canvas {
    pub width: f64,
    pub height: f64,
}

impl Canvas {
    pub fn center(&self) -> (f64, f64) {
        (self.width / 2.0, self.height / 2.0)
    }
}

/// Timing constants of the engine. All in session milliseconds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EngineParams {
    pub tick_ms: Millis,
    pub pause_ms: Millis,
    pub downsample_bucket_ms: Millis,
    pub merge_window_ms: Millis,
    pub link_containment: f64,
    pub threads: ThreadParams,
    pub tips: TipParams,
    pub reminders: ReminderParams,
}

impl Default for EngineParams {
    fn default() -> Self {
        Self {
            tick_ms: 1000,
            pause_ms: crate::chunker::PAUSE_MS,
            downsample_bucket_ms: crate::trace::BUCKET_MS,
            merge_window_ms: crate::notes::MERGE_WINDOW_MS,
            link_containment: 0.2,
            threads: ThreadParams::default(),
            tips: TipParams::default(),
            reminders: ReminderParams::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionConfig {
    #[serde(default)]
    pub mode: Mode,
    #[serde(default)]
    pub brief: String,
    #[serde(default)]
    pub scene: Vec<SceneElement>,
    pub canvas: Option<Canvas>,
    #[serde(default)]
    pub params: EngineParams,
}

impl SessionConfig {
    pub fn new(mode: Mode, canvas: Canvas) -> Self {
        Self { mode, brief: String::new(), scene: Vec::new(), canvas: Some(canvas), params: EngineParams::default() }
    }

    pub fn validate(&self) -> Result<Canvas, ConfigError> {
        let canvas = self.canvas.ok_or_else(|| ConfigError::field("canvas", "canvas dimensions are required"))?;
        if !(canvas.width.is_finite() && canvas.width > 0.0) {
            return Err(ConfigError::field("canvas.width", "must be a positive number"));
        }
        if !(canvas.height.is_finite() && canvas.height > 0.0) {
            return Err(ConfigError::field("canvas.height", "must be a positive number"));
        }
        let mut ids = BTreeSet::new();
        for el in &self.scene {
            el.validate().map_err(|e| ConfigError::field("scene", e.to_string()))?;
            if !ids.insert(el.id.as_str()) {
                return Err(ConfigError::field("scene", format!("duplicate element id `{}`", el.id)));
            }
        }
        let p = &self.params;
        if p.tick_ms == 0 {
            return Err(ConfigError::field("params.tick_ms", "must be positive"));
        }
        for (field, every) in [
            ("params.tips.generate_every_ms", p.tips.generate_every_ms),
            ("params.tips.gate_every_ms", p.tips.gate_every_ms),
            ("params.reminders.every_ms", p.reminders.every_ms),
        ] {
            if every == 0 || every % p.tick_ms != 0 {
                return Err(ConfigError::field(field, "must be a positive multiple of tick_ms"));
            }
        }
        if !(0.0..=1.0).contains(&p.link_containment) {
            return Err(ConfigError::field("params.link_containment", "must lie in [0, 1]"));
        }
        if !(0.0..=1.0).contains(&p.threads.min_affinity) {
            return Err(ConfigError::field("params.threads.min_affinity", "must lie in [0, 1]"));
        }
        Ok(canvas)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn canvas_required() {
        let cfg: SessionConfig = serde_json::from_str(r#"{"mode":"baseline","brief":"x"}"#).unwrap();
        let err = cfg.validate().unwrap_err();
        assert_eq!(err, ConfigError::field("canvas", "canvas dimensions are required"));
    }

    #[test]
    fn minimal_config_fills_defaults() {
        let cfg: SessionConfig = serde_json::from_str(r#"{"canvas":{"width":800,"height":600}}"#).unwrap();
        assert_eq!(cfg.mode, Mode::Full);
        assert_eq!(cfg.params.pause_ms, 8000);
        assert!(cfg.validate().is_ok());
    }

    #[test]
    fn cadence_must_align_with_ticks() {
        let mut cfg = SessionConfig::new(Mode::Full, Canvas { width: 10.0, height: 10.0 });
        cfg.params.tips.gate_every_ms = 1500;
        assert!(cfg.validate().is_err());
    }
}
