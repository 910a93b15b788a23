use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use super::{ElementLinkRequest, NoteDigest, SemanticOracle, SplitVerdict, TipDraft};
use crate::error::{ConfigError, OracleError};
use crate::model::{
    ActionSuggestion, NoteId, PointerTrace, ProcessLabel, SceneElement, TalkTip, TipCategory, TipId, ACTION_TITLE_MAX,
    MAX_ACTIONS, TIP_TEXT_MAX,
};
use crate::text::{self, Lexicon};

const DEFAULT_RULES: &str = include_str!("../../assets/rules.toml");

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabelKeywords {
    pub label: ProcessLabel,
    pub phrases: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ActionTemplate {
    pub label: ProcessLabel,
    pub title: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TipTemplate {
    pub keyword: String,
    pub category: TipCategory,
    pub text: String,
}

/// Everything the rule-based oracle decides with.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RuleConfig {
    #[serde(default = "default_stopwords")]
    pub stopwords: Vec<String>,
    pub discourse_markers: Vec<String>,
    pub split_jaccard_below: f64,
    pub split_min_buffer_words: usize,
    pub question_starters: Vec<String>,
    pub label_keywords: Vec<LabelKeywords>,
    pub summary_max_chars: usize,
    pub merge_jaccard: f64,
    pub related_jaccard: f64,
    pub link_containment: f64,
    pub action_templates: Vec<ActionTemplate>,
    pub tip_templates: Vec<TipTemplate>,
}

fn default_stopwords() -> Vec<String> {
    Lexicon::default().stopwords().map(str::to_string).collect()
}

impl Default for RuleConfig {
    fn default() -> Self {
        Self::from_toml(DEFAULT_RULES).expect("shipped rule table is valid")
    }
}

impl RuleConfig {
    pub fn from_toml(src: &str) -> Result<Self, ConfigError> {
        let cfg: RuleConfig = toml::from_str(src).map_err(|e| ConfigError::Parse(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.stopwords.iter().all(|s| s.trim().is_empty()) {
            return Err(ConfigError::field("stopwords", "must not be empty"));
        }
        if self.discourse_markers.iter().any(|m| text::words(m).is_empty()) {
            return Err(ConfigError::field("discourse_markers", "every marker needs at least one word"));
        }
        for (field, v) in [
            ("split_jaccard_below", self.split_jaccard_below),
            ("merge_jaccard", self.merge_jaccard),
            ("related_jaccard", self.related_jaccard),
            ("link_containment", self.link_containment),
        ] {
            if !(0.0..=1.0).contains(&v) {
                return Err(ConfigError::field(field, format!("{v} is outside [0, 1]")));
            }
        }
        if self.summary_max_chars == 0 {
            return Err(ConfigError::field("summary_max_chars", "must be positive"));
        }
        if let Some(t) = self.action_templates.iter().find(|t| ActionSuggestion::new(t.title.clone()).is_err()) {
            return Err(ConfigError::field(
                "action_templates",
                format!("title `{}` must be 1..={ACTION_TITLE_MAX} characters", t.title),
            ));
        }
        if let Some(t) =
            self.tip_templates.iter().find(|t| t.text.trim().is_empty() || t.text.chars().count() > TIP_TEXT_MAX)
        {
            return Err(ConfigError::field(
                "tip_templates",
                format!("text `{}` must be 1..={TIP_TEXT_MAX} characters", t.text),
            ));
        }
        if self.tip_templates.iter().any(|t| text::words(&t.keyword).len() != 1) {
            return Err(ConfigError::field("tip_templates", "keywords must be single words"));
        }
        Ok(())
    }

    pub fn lexicon(&self) -> Lexicon {
        Lexicon::new(&self.stopwords)
    }
}

/// Deterministic, stateless oracle driven by a [`RuleConfig`].
#[derive(Debug, Clone)]
pub struct RuleOracle {
    rules: RuleConfig,
    lexicon: Lexicon,
    markers: Vec<Vec<String>>,
    label_phrases: Vec<(ProcessLabel, Vec<Vec<String>>)>,
}

impl Default for RuleOracle {
    fn default() -> Self {
        Self::new(RuleConfig::default()).expect("default rules validate")
    }
}

impl RuleOracle {
    pub fn new(rules: RuleConfig) -> Result<Self, ConfigError> {
        rules.validate()?;
        let lexicon = rules.lexicon();
        let markers = rules.discourse_markers.iter().map(|m| text::words(m)).collect();
        let label_phrases = rules
            .label_keywords
            .iter()
            .map(|lk| (lk.label, lk.phrases.iter().map(|p| text::words(p)).collect()))
            .collect();
        Ok(Self { rules, lexicon, markers, label_phrases })
    }

    pub fn rules(&self) -> &RuleConfig {
        &self.rules
    }

    pub fn lexicon(&self) -> &Lexicon {
        &self.lexicon
    }

    fn starts_with_marker(&self, fragment: &str) -> bool {
        let words = text::words(fragment);
        self.markers.iter().any(|m| words.len() >= m.len() && words[..m.len()] == m[..])
    }

    fn is_question(&self, transcript: &str) -> bool {
        transcript.contains('?')
            || text::words(transcript).first().is_some_and(|w| self.rules.question_starters.iter().any(|q| q == w))
    }

    /// Labels from the keyword table, without the `Process` default.
    fn keyword_labels(&self, transcript: &str) -> BTreeSet<ProcessLabel> {
        let words = text::words(transcript);
        let mut labels = BTreeSet::new();
        if self.is_question(transcript) {
            labels.insert(ProcessLabel::Question);
        }
        for (label, phrases) in &self.label_phrases {
            if phrases.iter().any(|p| contains_phrase(&words, p)) {
                labels.insert(*label);
            }
        }
        labels
    }
}

/// Whole-word phrase match. Single-word phrases also match a plural `s`.
fn contains_phrase(words: &[String], phrase: &[String]) -> bool {
    match phrase {
        [] => false,
        [single] => words.iter().any(|w| w == single || w.strip_suffix('s') == Some(single.as_str())),
        _ => words.windows(phrase.len()).any(|win| win == phrase),
    }
}

/// Text up to and including the first `.`, `!` or `?` that ends a sentence.
pub(crate) fn first_sentence(transcript: &str) -> &str {
    let trimmed = transcript.trim();
    let mut chars = trimmed.char_indices().peekable();
    while let Some((i, c)) = chars.next() {
        if matches!(c, '.' | '!' | '?') {
            match chars.peek() {
                None => return trimmed,
                Some((_, n)) if n.is_whitespace() => return &trimmed[..i + c.len_utf8()],
                _ => {}
            }
        }
    }
    trimmed
}

/// Name mentions plus pointer containment.
pub(crate) fn rule_links(
    lexicon_words: &[String],
    trace: &PointerTrace,
    scene: &[SceneElement],
    containment: f64,
) -> BTreeSet<String> {
    let mut linked = BTreeSet::new();
    for el in scene {
        let name = text::words(&el.name);
        if !name.is_empty() && lexicon_words.windows(name.len()).any(|w| w == name.as_slice()) {
            linked.insert(el.id.clone());
            continue;
        }
        if !trace.is_empty() {
            let inside = trace.samples.iter().filter(|s| el.bounds.contains(s)).count();
            if inside as f64 >= containment * trace.len() as f64 && inside > 0 {
                linked.insert(el.id.clone());
            }
        }
    }
    linked
}

impl SemanticOracle for RuleOracle {
    fn judge_split(&self, buffer: &str, fragment: &str) -> Result<SplitVerdict, OracleError> {
        if self.starts_with_marker(fragment) {
            return Ok(SplitVerdict::NewTopic);
        }
        if self.lexicon.content_count(buffer) >= self.rules.split_min_buffer_words
            && self.lexicon.jaccard(buffer, fragment) < self.rules.split_jaccard_below
        {
            return Ok(SplitVerdict::NewTopic);
        }
        Ok(SplitVerdict::Continue)
    }

    fn summarize(&self, transcript: &str) -> Result<String, OracleError> {
        Ok(text::truncate_chars(first_sentence(transcript), self.rules.summary_max_chars))
    }

    fn classify_labels(&self, transcript: &str) -> Result<BTreeSet<ProcessLabel>, OracleError> {
        let mut labels = self.keyword_labels(transcript);
        if labels.is_empty() {
            labels.insert(ProcessLabel::Process);
        }
        Ok(labels)
    }

    fn suggest_actions(
        &self,
        _transcript: &str,
        labels: &BTreeSet<ProcessLabel>,
    ) -> Result<Vec<ActionSuggestion>, OracleError> {
        let mut out: Vec<ActionSuggestion> = Vec::new();
        for t in self.rules.action_templates.iter().filter(|t| labels.contains(&t.label)) {
            if out.len() == MAX_ACTIONS {
                break;
            }
            if out.iter().all(|a| a.title != t.title) {
                out.push(ActionSuggestion { title: t.title.clone() });
            }
        }
        Ok(out)
    }

    fn merge_check(&self, prev: &str, new: &str) -> Result<bool, OracleError> {
        Ok(self.lexicon.jaccard(prev, new) >= self.rules.merge_jaccard)
    }

    fn thread_affinity(&self, note: &str, thread_context: &str) -> Result<f64, OracleError> {
        Ok(self.lexicon.jaccard(note, thread_context))
    }

    fn tip_candidates(&self, recent_transcript: &str, _brief: &str) -> Result<Vec<TipDraft>, OracleError> {
        let words = self.lexicon.content_words(recent_transcript);
        let mut out: Vec<TipDraft> = Vec::new();
        for t in &self.rules.tip_templates {
            if out.iter().any(|d| d.category == t.category) {
                continue;
            }
            let kw = t.keyword.to_lowercase();
            if contains_phrase(&words, std::slice::from_ref(&kw)) {
                out.push(TipDraft { category: t.category, text: t.text.clone() });
            }
        }
        Ok(out)
    }

    fn tip_gate(&self, pool: &[TalkTip], window: &str) -> Result<Option<TipId>, OracleError> {
        let window = self.lexicon.content_set(window);
        let best = pool
            .iter()
            .map(|tip| (self.lexicon.content_set(&tip.text).intersection(&window).count(), tip.id))
            .filter(|(overlap, _)| *overlap >= 1)
            // highest overlap, then oldest tip
            .max_by(|a, b| a.0.cmp(&b.0).then(b.1.cmp(&a.1)));
        Ok(best.map(|(_, id)| id))
    }

    fn related_notes(&self, window: &str, notes: &[NoteDigest]) -> Result<Vec<NoteId>, OracleError> {
        let window = self.lexicon.content_set(window);
        let mut scored: Vec<(f64, NoteId)> = notes
            .iter()
            .map(|n| (text::jaccard(&window, &self.lexicon.content_set(&n.transcript)), n.id))
            .filter(|(score, _)| *score >= self.rules.related_jaccard)
            .collect();
        scored.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
        Ok(scored.into_iter().map(|(_, id)| id).collect())
    }

    fn element_link(&self, request: &ElementLinkRequest<'_>) -> Result<BTreeSet<String>, OracleError> {
        let words = text::words(request.transcript);
        Ok(rule_links(&words, request.trace, request.scene, self.rules.link_containment))
    }
}
