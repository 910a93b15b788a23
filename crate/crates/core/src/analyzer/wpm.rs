//! Word counting for speaking-rate measurement.
//!
//! Whitespace and punctuation separate tokens. Trailing clitics ('s, 'm,
//! 're, 've, 'll, 'd, n't) are split off as their own tokens, except when
//! the whole form is a common contraction, which counts as one word. A token
//! counts when it contains a letter.

use crate::error::AnalyzeError;

/// Contractions counted as a single word.
pub const CONTRACTIONS: [&str; 30] = [
    "don't",
    "doesn't",
    "didn't",
    "can't",
    "won't",
    "isn't",
    "aren't",
    "wasn't",
    "weren't",
    "haven't",
    "hasn't",
    "hadn't",
    "wouldn't",
    "shouldn't",
    "couldn't",
    "i'm",
    "you're",
    "we're",
    "they're",
    "it's",
    "that's",
    "there's",
    "let's",
    "i've",
    "we've",
    "you've",
    "i'll",
    "we'll",
    "i'd",
    "what's",
];

const CLITICS: [&str; 7] = ["n't", "'s", "'m", "'re", "'ve", "'ll", "'d"];

fn is_word_char(c: char) -> bool {
    c.is_alphanumeric() || c == '\''
}

fn has_alpha(s: &str) -> bool {
    s.chars().any(char::is_alphabetic)
}

fn count_run(run: &str) -> usize {
    let run = run.trim_matches('\'');
    if run.is_empty() {
        return 0;
    }
    if !run.contains('\'') {
        return has_alpha(run) as usize;
    }
    let lower = run.to_lowercase();
    if CONTRACTIONS.contains(&lower.as_str()) {
        return 1;
    }
    match CLITICS.iter().find(|c| lower.ends_with(*c) && lower.len() > c.len()) {
        Some(clitic) => {
            let (base, tail) = lower.split_at(lower.len() - clitic.len());
            has_alpha(base) as usize + has_alpha(tail) as usize
        }
        None => 1,
    }
}

pub fn count_words(transcript: &str) -> usize {
    let normalized = transcript.replace(['\u{2019}', '\u{2018}'], "'");
    normalized.split(|c: char| !is_word_char(c)).map(count_run).sum()
}

/// Words per minute over `minutes`.
pub fn wpm(transcript: &str, minutes: f64) -> Result<f64, AnalyzeError> {
    if minutes.is_nan() || minutes <= 0.0 {
        return Err(AnalyzeError::ZeroDuration);
    }
    Ok(count_words(transcript) as f64 / minutes)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn examples() {
        assert_eq!(count_words("don't stop now!"), 3);
        assert_eq!(count_words("... --- 123"), 0);
        assert_eq!(wpm("", 1.0), Ok(0.0));
        assert_eq!(wpm("x", 0.0), Err(AnalyzeError::ZeroDuration));
        assert_eq!(wpm("one two three four", 2.0), Ok(2.0));
    }

    #[test]
    fn clitics() {
        assert_eq!(count_words("It's"), 1);
        assert_eq!(count_words("John's plan"), 3);
        assert_eq!(count_words("ain't"), 2);
        assert_eq!(count_words("the dogs' bowls"), 3);
        assert_eq!(count_words("o'clock"), 1);
        assert_eq!(count_words("well-lit room"), 3);
        assert_eq!(count_words("DON\u{2019}T"), 1);
    }
}
