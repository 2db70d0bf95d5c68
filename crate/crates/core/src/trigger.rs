//! Transcript-content triggering: an utterance enters the pipeline when it
//! contains one of the configured scheduling keywords as whole words.

use std::ops::Range;

use serde::Serialize;

pub const DEFAULT_KEYWORDS: [&str; 4] = ["schedule", "book", "set up", "arrange"];

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct TriggerMatch {
    /// The matched keyword, lowercase.
    pub keyword: String,
    /// Byte offsets `[start, end)` into the transcript.
    pub span: (usize, usize),
}

impl TriggerMatch {
    pub fn range(&self) -> Range<usize> {
        self.span.0..self.span.1
    }
}

/// A normalized keyword set. Multi-word keywords are stored with single
/// spaces between words.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct KeywordSet {
    keywords: Vec<Vec<String>>,
}

impl KeywordSet {
    pub fn new<I, S>(keywords: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let mut out: Vec<Vec<String>> = keywords
            .into_iter()
            .map(|k| {
                k.as_ref()
                    .split_whitespace()
                    .map(str::to_lowercase)
                    .collect::<Vec<_>>()
            })
            .filter(|words| !words.is_empty())
            .collect();
        out.sort();
        out.dedup();
        Self { keywords: out }
    }

    pub fn is_empty(&self) -> bool {
        self.keywords.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = String> + '_ {
        self.keywords.iter().map(|w| w.join(" "))
    }
}

impl Default for KeywordSet {
    fn default() -> Self {
        Self::new(DEFAULT_KEYWORDS)
    }
}

/// Word characters: alphanumerics plus apostrophe and hyphen, so
/// "follow-up" and "o'clock" are single words.
pub(crate) fn is_word_char(c: char) -> bool {
    c.is_alphanumeric() || c == '\'' || c == '-'
}

/// Byte spans of the words in `text`.
pub(crate) fn word_spans(text: &str) -> Vec<(usize, usize)> {
    let mut spans = Vec::new();
    let mut start = None;
    for (i, c) in text.char_indices() {
        match (is_word_char(c), start) {
            (true, None) => start = Some(i),
            (false, Some(s)) => {
                spans.push((s, i));
                start = None;
            }
            _ => {}
        }
    }
    if let Some(s) = start {
        spans.push((s, text.len()));
    }
    spans
}

/// Earliest case-insensitive whole-word keyword occurrence in `text`.
///
/// A multi-word keyword matches consecutive words separated by exactly one
/// space. When two keywords start at the same word the longer one wins.
pub fn detect(text: &str, keywords: &KeywordSet) -> Option<TriggerMatch> {
    let spans = word_spans(text);
    let lowered: Vec<String> = spans
        .iter()
        .map(|&(s, e)| text[s..e].to_lowercase())
        .collect();

    for i in 0..spans.len() {
        let mut best: Option<(usize, &Vec<String>)> = None;
        for kw in &keywords.keywords {
            let n = kw.len();
            if i + n > spans.len() {
                continue;
            }
            let words_match = kw.iter().zip(&lowered[i..i + n]).all(|(a, b)| a == b);
            let gaps_single_space =
                (i..i + n - 1).all(|j| &text[spans[j].1..spans[j + 1].0] == " ");
            if words_match && gaps_single_space && best.is_none_or(|(len, _)| n > len) {
                best = Some((n, kw));
            }
        }
        if let Some((n, kw)) = best {
            return Some(TriggerMatch {
                keyword: kw.join(" "),
                span: (spans[i].0, spans[i + n - 1].1),
            });
        }
    }
    None
}
