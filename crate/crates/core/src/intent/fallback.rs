//! Deterministic rule-based extraction, used when the model is unavailable
//! or keeps replying with invalid output.
//!
//! Grammar, applied to whitespace tokens:
//! - attendee: the capitalized name after "with", optionally led by an
//!   honorific ("Mr.", "Ms.", "Dr.", ...);
//! - time: the time pattern after "at" ("2", "9 am", "2:30 pm", "noon"),
//!   else the first explicit-meridiem time anywhere;
//! - duration: a number before minute/hour units, hours counted as 60;
//! - date: the earliest of today, tomorrow, "next <weekday>", "<weekday>",
//!   "on <month> <day>";
//! - description: the object of the trigger verb up to "with" (or another
//!   stop word), minus determiners and any duration phrase.

use std::collections::BTreeSet;

use crate::error::FallbackError;
use crate::model::SchedulingIntent;
use crate::temporal::{parse_day_of_month, parse_month};
use crate::trigger::{detect, KeywordSet};

const HONORIFICS: [&str; 7] = ["mr", "mrs", "ms", "mx", "dr", "miss", "prof"];
const WEEKDAYS: [&str; 7] = [
    "monday",
    "tuesday",
    "wednesday",
    "thursday",
    "friday",
    "saturday",
    "sunday",
];
const DETERMINERS: [&str; 9] = ["a", "an", "the", "my", "our", "me", "us", "another", "some"];
const DESCRIPTION_STOPS: [&str; 11] = [
    "with", "at", "on", "for", "next", "this", "today", "tomorrow", "tonight", "in", "from",
];

#[derive(Debug, Clone)]
struct Token<'a> {
    /// Token with surrounding punctuation removed; abbreviation periods kept.
    text: &'a str,
    /// Lowercase, all surrounding punctuation removed.
    norm: String,
    /// Byte offset of the token in the transcript.
    start: usize,
    /// Raw token ended with a clause break (comma, full stop, ...).
    breaks_after: bool,
}

fn is_abbreviation(core: &str) -> bool {
    let lower = core.to_lowercase();
    let bare = lower.trim_end_matches('.');
    HONORIFICS.contains(&bare) || matches!(lower.as_str(), "a.m." | "p.m." | "a.m" | "p.m")
}

fn tokenize(text: &str) -> Vec<Token<'_>> {
    let mut out = Vec::new();
    let mut offset = 0;
    for raw in text.split_whitespace() {
        let start_in = text[offset..].find(raw).map_or(offset, |i| offset + i);
        offset = start_in + raw.len();

        let lead = raw.len()
            - raw
                .trim_start_matches(['"', '\'', '(', '[', '“', '‘'])
                .len();
        let mut core = &raw[lead..];
        core = core.trim_end_matches(['"', '\'', ')', ']', '”', '’']);
        let before_punct = core;
        let stripped = core.trim_end_matches([',', '.', '!', '?', ';', ':']);
        let text_form = if is_abbreviation(before_punct) {
            // keep exactly one trailing period on "Dr." / "a.m."
            let no_comma = before_punct.trim_end_matches([',', '!', '?', ';', ':']);
            if no_comma.ends_with('.') {
                no_comma
            } else {
                stripped
            }
        } else {
            stripped
        };
        let breaks_after = raw.ends_with([',', ';', '!', '?'])
            || (raw.ends_with('.') && !is_abbreviation(before_punct));
        if text_form.is_empty() {
            continue;
        }
        out.push(Token {
            text: text_form,
            norm: stripped.to_lowercase(),
            start: start_in + lead,
            breaks_after,
        });
    }
    out
}

fn is_weekday(norm: &str) -> bool {
    WEEKDAYS.contains(&norm)
}

fn is_capitalized(token: &Token<'_>) -> bool {
    token.text.chars().next().is_some_and(char::is_uppercase)
}

fn number_word(norm: &str) -> Option<u32> {
    if !norm.is_empty() && norm.len() <= 4 && norm.bytes().all(|b| b.is_ascii_digit()) {
        return norm.parse().ok();
    }
    Some(match norm {
        "one" => 1,
        "two" => 2,
        "three" => 3,
        "four" => 4,
        "five" => 5,
        "six" => 6,
        "seven" => 7,
        "eight" => 8,
        "nine" => 9,
        "ten" => 10,
        "twelve" => 12,
        "fifteen" => 15,
        "twenty" => 20,
        "thirty" => 30,
        "forty" => 40,
        "forty-five" => 45,
        "fifty" => 50,
        "sixty" => 60,
        "ninety" => 90,
        _ => return None,
    })
}

fn unit_minutes(norm: &str) -> Option<u32> {
    match norm {
        "minute" | "minutes" | "min" | "mins" => Some(1),
        "hour" | "hours" | "hr" | "hrs" => Some(60),
        _ => None,
    }
}

/// A matched phrase: token index range and the value it carries.
#[derive(Debug, Clone, PartialEq, Eq)]
struct Phrase<T> {
    first: usize,
    last: usize,
    value: T,
}

impl<T> Phrase<T> {
    fn indices(&self) -> std::ops::RangeInclusive<usize> {
        self.first..=self.last
    }
}

fn find_duration(tokens: &[Token<'_>]) -> Option<Phrase<u32>> {
    for i in 0..tokens.len() {
        let norm = tokens[i].norm.as_str();
        // "half an hour" / "half hour"
        if norm == "half" {
            if tokens.get(i + 1).is_some_and(|t| t.norm == "hour") {
                return Some(Phrase {
                    first: i,
                    last: i + 1,
                    value: 30,
                });
            }
            if tokens.get(i + 1).is_some_and(|t| t.norm == "an")
                && tokens.get(i + 2).is_some_and(|t| t.norm == "hour")
            {
                return Some(Phrase {
                    first: i,
                    last: i + 2,
                    value: 30,
                });
            }
        }
        // "30-minute", "one-hour"
        if let Some((n, unit)) = norm.rsplit_once('-') {
            if let (Some(n), Some(per)) = (number_word(n), unit_minutes(unit)) {
                if let Some(v) = valid_minutes(n * per) {
                    return Some(Phrase {
                        first: i,
                        last: i,
                        value: v,
                    });
                }
            }
        }
        let Some(next) = tokens.get(i + 1) else {
            continue;
        };
        let Some(per) = unit_minutes(&next.norm) else {
            continue;
        };
        let n = match norm {
            "a" | "an" => Some(1),
            other => number_word(other),
        };
        if let Some(v) = n.and_then(|n| valid_minutes(n * per)) {
            return Some(Phrase {
                first: i,
                last: i + 1,
                value: v,
            });
        }
    }
    None
}

fn valid_minutes(m: u32) -> Option<u32> {
    (1..=1440).contains(&m).then_some(m)
}

fn is_meridiem(norm: &str) -> bool {
    matches!(norm, "am" | "pm" | "a.m" | "p.m")
}

/// `2`, `2:30`, with or without an attached meridiem. Returns whether the
/// meridiem is attached.
fn clock_token(norm: &str) -> Option<bool> {
    let digits_end = norm
        .find(|c: char| !(c.is_ascii_digit() || c == ':'))
        .unwrap_or(norm.len());
    let (clock, rest) = norm.split_at(digits_end);
    let valid_clock = match clock.split_once(':') {
        Some((h, m)) => {
            (1..=2).contains(&h.len())
                && m.len() == 2
                && h.bytes().chain(m.bytes()).all(|b| b.is_ascii_digit())
        }
        None => (1..=2).contains(&clock.len()),
    };
    if !valid_clock {
        return None;
    }
    match rest {
        "" => Some(false),
        r if is_meridiem(r) => Some(true),
        _ => None,
    }
}

/// Time phrase starting at token `i`, if any; `explicit` requires a meridiem
/// or a named time.
fn time_at(tokens: &[Token<'_>], i: usize, explicit: bool) -> Option<Phrase<String>> {
    let tok = tokens.get(i)?;
    if matches!(tok.norm.as_str(), "noon" | "midnight") {
        return Some(Phrase {
            first: i,
            last: i,
            value: tok.text.to_string(),
        });
    }
    let attached = clock_token(&tok.norm)?;
    if attached {
        return Some(Phrase {
            first: i,
            last: i,
            value: tok.text.to_string(),
        });
    }
    if let Some(next) = tokens.get(i + 1) {
        if is_meridiem(&next.norm) && !tok.breaks_after {
            return Some(Phrase {
                first: i,
                last: i + 1,
                value: format!("{} {}", tok.text, next.text),
            });
        }
        if next.norm == "o'clock" {
            return Some(Phrase {
                first: i,
                last: i + 1,
                value: format!("{} {}", tok.text, next.text),
            });
        }
    }
    (!explicit).then(|| Phrase {
        first: i,
        last: i,
        value: tok.text.to_string(),
    })
}

fn find_time(tokens: &[Token<'_>]) -> Option<Phrase<String>> {
    let after_at = tokens
        .iter()
        .enumerate()
        .filter(|(_, t)| t.norm == "at")
        .find_map(|(i, _)| time_at(tokens, i + 1, false));
    after_at.or_else(|| (0..tokens.len()).find_map(|i| time_at(tokens, i, true)))
}

fn find_date(tokens: &[Token<'_>]) -> Option<Phrase<String>> {
    for (i, tok) in tokens.iter().enumerate() {
        match tok.norm.as_str() {
            "today" | "tomorrow" => {
                return Some(Phrase {
                    first: i,
                    last: i,
                    value: tok.text.to_string(),
                });
            }
            "next" => {
                if let Some(day) = tokens.get(i + 1).filter(|t| is_weekday(&t.norm)) {
                    return Some(Phrase {
                        first: i,
                        last: i + 1,
                        value: format!("{} {}", tok.text, day.text),
                    });
                }
            }
            "on" => {
                if let (Some(month), Some(day)) = (tokens.get(i + 1), tokens.get(i + 2)) {
                    if parse_month(&month.norm).is_some() && parse_day_of_month(&day.norm).is_some()
                    {
                        return Some(Phrase {
                            first: i,
                            last: i + 2,
                            value: format!("{} {} {}", tok.text, month.text, day.text),
                        });
                    }
                }
            }
            norm if is_weekday(norm) => {
                return Some(Phrase {
                    first: i,
                    last: i,
                    value: tok.text.to_string(),
                });
            }
            _ => {}
        }
    }
    None
}

fn is_name_stop(token: &Token<'_>) -> bool {
    is_weekday(&token.norm)
        || matches!(
            token.norm.as_str(),
            "today" | "tomorrow" | "next" | "at" | "on"
        )
}

fn find_attendee(tokens: &[Token<'_>]) -> Option<Phrase<String>> {
    for (w, _) in tokens.iter().enumerate().filter(|(_, t)| t.norm == "with") {
        if tokens[w].breaks_after {
            continue;
        }
        let first = w + 1;
        let Some(head) = tokens.get(first) else {
            continue;
        };
        let honorific = HONORIFICS.contains(&head.norm.as_str()) && is_capitalized(head);
        let mut last = None;
        let mut i = if honorific {
            if head.breaks_after {
                continue;
            }
            last = Some(first);
            first + 1
        } else {
            first
        };
        let mut names = 0;
        while let Some(tok) = tokens.get(i) {
            if !is_capitalized(tok) || is_name_stop(tok) {
                break;
            }
            last = Some(i);
            names += 1;
            i += 1;
            if tok.breaks_after {
                break;
            }
        }
        if names == 0 {
            continue;
        }
        let last = last.expect("at least one name token");
        let value = tokens[first..=last]
            .iter()
            .map(|t| t.text)
            .collect::<Vec<_>>()
            .join(" ");
        return Some(Phrase { first, last, value });
    }
    None
}

fn find_description(
    tokens: &[Token<'_>],
    object_start: usize,
    claimed: &BTreeSet<usize>,
) -> Option<String> {
    let mut words: Vec<&str> = Vec::new();
    for (i, tok) in tokens.iter().enumerate().skip(object_start) {
        if DESCRIPTION_STOPS.contains(&tok.norm.as_str()) || is_weekday(&tok.norm) {
            break;
        }
        if claimed.contains(&i) {
            if tok.breaks_after {
                break;
            }
            continue;
        }
        words.push(tok.text);
        if tok.breaks_after {
            break;
        }
    }
    let lead = words
        .iter()
        .take_while(|w| DETERMINERS.contains(&w.to_lowercase().as_str()))
        .count();
    let phrase = words[lead..].join(" ");
    (!phrase.is_empty()).then_some(phrase)
}

/// Rule-based extraction with an explicit keyword set.
pub fn extract_fallback_with(
    transcript: &str,
    keywords: &KeywordSet,
) -> Result<SchedulingIntent, FallbackError> {
    let tokens = tokenize(transcript);
    let object_start = detect(transcript, keywords)
        .map(|m| tokens.iter().take_while(|t| t.start < m.span.1).count())
        .unwrap_or(0);

    let duration = find_duration(&tokens);
    let time = find_time(&tokens);
    let date = find_date(&tokens);
    let attendee = find_attendee(&tokens);

    if date.is_none() && time.is_none() {
        return Err(FallbackError::Unresolvable(transcript.to_string()));
    }

    let mut claimed = BTreeSet::new();
    for range in [
        duration.as_ref().map(Phrase::indices),
        time.as_ref().map(Phrase::indices),
        date.as_ref().map(Phrase::indices),
    ]
    .into_iter()
    .flatten()
    {
        claimed.extend(range);
    }
    let description = find_description(&tokens, object_start, &claimed);

    Ok(SchedulingIntent {
        attendee: attendee.map(|p| p.value),
        date_expression: date.map(|p| p.value),
        time_expression: time.map(|p| p.value),
        duration_minutes: duration.map(|p| p.value),
        description,
        ..SchedulingIntent::default()
    })
}

/// Rule-based extraction using the default trigger keywords.
pub fn extract_fallback(transcript: &str) -> Result<SchedulingIntent, FallbackError> {
    extract_fallback_with(transcript, &KeywordSet::default())
}
