//! Word-level text utilities shared by the chunker and the rule-based oracle.

use std::collections::BTreeSet;

/// Stopwords shipped with the crate, one per line.
pub const DEFAULT_STOPWORDS: &str = include_str!("../assets/stopwords.txt");

/// Lowercased word tokens: runs of alphanumerics and inner apostrophes.
pub fn words(text: &str) -> Vec<String> {
    let mut out = Vec::new();
    let mut cur = String::new();
    for ch in text.chars() {
        let ch = if ch == '\u{2019}' || ch == '\u{2018}' { '\'' } else { ch };
        if ch.is_alphanumeric() || ch == '\'' {
            cur.extend(ch.to_lowercase());
        } else if !cur.is_empty() {
            push_word(&mut out, &mut cur);
        }
    }
    if !cur.is_empty() {
        push_word(&mut out, &mut cur);
    }
    out
}

fn push_word(out: &mut Vec<String>, cur: &mut String) {
    let trimmed = cur.trim_matches('\'');
    if !trimmed.is_empty() {
        out.push(trimmed.to_string());
    }
    cur.clear();
}

/// Decides which words carry content.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Lexicon {
    stopwords: BTreeSet<String>,
}

impl Default for Lexicon {
    fn default() -> Self {
        Self::from_list(DEFAULT_STOPWORDS)
    }
}

impl Lexicon {
    pub fn new<I, S>(stopwords: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let stopwords =
            stopwords.into_iter().map(|s| s.as_ref().trim().to_lowercase()).filter(|s| !s.is_empty()).collect();
        Self { stopwords }
    }

    /// Parses a newline-separated list; `#` starts a comment line.
    pub fn from_list(list: &str) -> Self {
        Self::new(list.lines().filter(|l| !l.trim_start().starts_with('#')))
    }

    pub fn stopwords(&self) -> impl Iterator<Item = &str> {
        self.stopwords.iter().map(String::as_str)
    }

    pub fn len(&self) -> usize {
        self.stopwords.len()
    }

    pub fn is_empty(&self) -> bool {
        self.stopwords.is_empty()
    }

    pub fn is_content(&self, word: &str) -> bool {
        word.chars().any(char::is_alphabetic) && !self.stopwords.contains(word)
    }

    /// Content words in order of appearance, duplicates kept.
    pub fn content_words(&self, text: &str) -> Vec<String> {
        words(text).into_iter().filter(|w| self.is_content(w)).collect()
    }

    pub fn content_set(&self, text: &str) -> BTreeSet<String> {
        words(text).into_iter().filter(|w| self.is_content(w)).collect()
    }

    pub fn content_count(&self, text: &str) -> usize {
        words(text).iter().filter(|w| self.is_content(w)).count()
    }

    pub fn jaccard(&self, a: &str, b: &str) -> f64 {
        jaccard(&self.content_set(a), &self.content_set(b))
    }

    pub fn overlap(&self, a: &str, b: &str) -> usize {
        self.content_set(a).intersection(&self.content_set(b)).count()
    }
}

/// |a ∩ b| / |a ∪ b|, defined as 0 when both sets are empty.
pub fn jaccard(a: &BTreeSet<String>, b: &BTreeSet<String>) -> f64 {
    let union = a.union(b).count();
    if union == 0 {
        return 0.0;
    }
    a.intersection(b).count() as f64 / union as f64
}

/// First `max` characters of `text`.
pub fn truncate_chars(text: &str, max: usize) -> String {
    text.chars().take(max).collect()
}

/// Joins non-empty pieces with single spaces.
pub fn join_spaced<'a, I: IntoIterator<Item = &'a str>>(parts: I) -> String {
    let mut out = String::new();
    for p in parts {
        let p = p.trim();
        if p.is_empty() {
            continue;
        }
        if !out.is_empty() {
            out.push(' ');
        }
        out.push_str(p);
    }
    out
}
