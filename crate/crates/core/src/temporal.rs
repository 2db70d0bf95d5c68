//! Resolution of spoken date and time expressions against a reference clock.
//!
//! Conventions:
//! - `next <weekday>` and a bare `<weekday>` both mean the first such day
//!   strictly after the reference date.
//! - `on <month> <day>` is in the reference year, or the following year
//!   when that date has already passed.
//! - A bare hour from 1 to 7 is afternoon, 8 to 12 is morning.
//! - Wall times that fall into a DST gap move forward to the first valid
//!   instant; ambiguous wall times take the earlier instant.

use std::fmt;

use chrono::{
    DateTime, Datelike, Days, Duration, NaiveDate, NaiveDateTime, NaiveTime, TimeZone, Weekday,
};
use chrono_tz::Tz;
use serde::{Deserialize, Serialize};

use crate::error::TemporalError;
use crate::model::{ReferenceClock, ResolvedEvent, SchedulingIntent};

pub const DEFAULT_DURATION_MINUTES: u32 = 30;
pub const DEFAULT_START_MINUTES: u32 = 9 * 60;

/// Minutes past local midnight, always in `[0, 1440)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct TimeOfDay(u32);

impl TimeOfDay {
    pub const MIDNIGHT: TimeOfDay = TimeOfDay(0);
    pub const NOON: TimeOfDay = TimeOfDay(12 * 60);

    pub fn from_minutes(minutes: u32) -> Option<Self> {
        (minutes < 1440).then_some(TimeOfDay(minutes))
    }

    pub fn from_hm(hour: u32, minute: u32) -> Option<Self> {
        (hour < 24 && minute < 60).then(|| TimeOfDay(hour * 60 + minute))
    }

    pub fn minutes_since_midnight(self) -> u32 {
        self.0
    }

    pub fn hour(self) -> u32 {
        self.0 / 60
    }

    pub fn minute(self) -> u32 {
        self.0 % 60
    }

    pub fn to_naive(self) -> NaiveTime {
        NaiveTime::from_hms_opt(self.hour(), self.minute(), 0)
            .expect("range checked on construction")
    }
}

impl fmt::Display for TimeOfDay {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:02}:{:02}", self.hour(), self.minute())
    }
}

impl std::str::FromStr for TimeOfDay {
    type Err = TemporalError;

    /// Parses 24-hour `HH:MM`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || TemporalError::UnrecognizedTime(s.to_string());
        let (h, m) = s.trim().split_once(':').ok_or_else(bad)?;
        let h: u32 = h.parse().map_err(|_| bad())?;
        let m: u32 = m.parse().map_err(|_| bad())?;
        TimeOfDay::from_hm(h, m).ok_or_else(bad)
    }
}

impl Serialize for TimeOfDay {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for TimeOfDay {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        String::deserialize(d)?
            .parse()
            .map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct WindowDefaults {
    pub default_duration_minutes: u32,
    pub default_start_time: TimeOfDay,
}

impl Default for WindowDefaults {
    fn default() -> Self {
        Self {
            default_duration_minutes: DEFAULT_DURATION_MINUTES,
            default_start_time: TimeOfDay(DEFAULT_START_MINUTES),
        }
    }
}

/// Lowercases, collapses whitespace and drops surrounding punctuation.
fn normalize(expr: &str) -> String {
    expr.split_whitespace()
        .collect::<Vec<_>>()
        .join(" ")
        .to_lowercase()
        .trim_matches(|c: char| matches!(c, '.' | ',' | '!' | '?' | ';' | ':'))
        .to_string()
}

pub fn parse_weekday(word: &str) -> Option<Weekday> {
    let w = word.trim_end_matches(['.', ',']).to_lowercase();
    Some(match w.as_str() {
        "monday" | "mon" => Weekday::Mon,
        "tuesday" | "tue" | "tues" => Weekday::Tue,
        "wednesday" | "wed" => Weekday::Wed,
        "thursday" | "thu" | "thur" | "thurs" => Weekday::Thu,
        "friday" | "fri" => Weekday::Fri,
        "saturday" | "sat" => Weekday::Sat,
        "sunday" | "sun" => Weekday::Sun,
        _ => return None,
    })
}

pub fn parse_month(word: &str) -> Option<u32> {
    let w = word.trim_end_matches(['.', ',']).to_lowercase();
    Some(match w.as_str() {
        "january" | "jan" => 1,
        "february" | "feb" => 2,
        "march" | "mar" => 3,
        "april" | "apr" => 4,
        "may" => 5,
        "june" | "jun" => 6,
        "july" | "jul" => 7,
        "august" | "aug" => 8,
        "september" | "sep" | "sept" => 9,
        "october" | "oct" => 10,
        "november" | "nov" => 11,
        "december" | "dec" => 12,
        _ => return None,
    })
}

/// Day of month from `3`, `3rd`, `21st`.
pub fn parse_day_of_month(word: &str) -> Option<u32> {
    let w = word.trim_end_matches(['.', ',']).to_lowercase();
    let digits = w
        .strip_suffix("st")
        .or_else(|| w.strip_suffix("nd"))
        .or_else(|| w.strip_suffix("rd"))
        .or_else(|| w.strip_suffix("th"))
        .unwrap_or(&w);
    if digits.is_empty() || digits.len() > 2 || !digits.bytes().all(|b| b.is_ascii_digit()) {
        return None;
    }
    digits.parse().ok().filter(|d| (1..=31).contains(d))
}

/// First date strictly after `reference` falling on `weekday`.
pub fn next_weekday(reference: NaiveDate, weekday: Weekday) -> NaiveDate {
    let from = reference.weekday().num_days_from_monday();
    let to = weekday.num_days_from_monday();
    let ahead = match (to + 7 - from) % 7 {
        0 => 7,
        n => n,
    };
    reference + Days::new(u64::from(ahead))
}

fn month_day_on_or_after(reference: NaiveDate, month: u32, day: u32) -> Option<NaiveDate> {
    // Feb 29 may need up to eight years to recur.
    (0..=8).find_map(|offset| {
        NaiveDate::from_ymd_opt(reference.year() + offset, month, day).filter(|d| *d >= reference)
    })
}

pub fn resolve_date(expr: &str, reference: NaiveDate) -> Result<NaiveDate, TemporalError> {
    let norm = normalize(expr);
    let unrecognized = || TemporalError::UnrecognizedDate(expr.to_string());
    let words: Vec<&str> = norm.split(' ').filter(|w| !w.is_empty()).collect();

    match words.as_slice() {
        ["today"] => Ok(reference),
        ["tomorrow"] => reference.succ_opt().ok_or_else(unrecognized),
        ["next", day] | [day] if parse_weekday(day).is_some() => Ok(next_weekday(
            reference,
            parse_weekday(day).ok_or_else(unrecognized)?,
        )),
        ["on", month, day] | [month, day] => {
            let month = parse_month(month).ok_or_else(unrecognized)?;
            let day = parse_day_of_month(day).ok_or_else(unrecognized)?;
            month_day_on_or_after(reference, month, day).ok_or_else(unrecognized)
        }
        [iso] => NaiveDate::parse_from_str(iso, "%Y-%m-%d").map_err(|_| unrecognized()),
        _ => Err(unrecognized()),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Meridiem {
    Am,
    Pm,
}

fn parse_meridiem(s: &str) -> Option<Meridiem> {
    match s.replace('.', "").as_str() {
        "am" | "a" => Some(Meridiem::Am),
        "pm" | "p" => Some(Meridiem::Pm),
        _ => None,
    }
}

pub fn resolve_time(expr: &str) -> Result<TimeOfDay, TemporalError> {
    let unrecognized = || TemporalError::UnrecognizedTime(expr.to_string());
    let mut norm = normalize(expr);
    if let Some(rest) = norm.strip_prefix("at ") {
        norm = rest.to_string();
    }
    if let Some(rest) = norm.strip_suffix(" o'clock") {
        norm = rest.to_string();
    }
    match norm.as_str() {
        "noon" | "midday" => return Ok(TimeOfDay::NOON),
        "midnight" => return Ok(TimeOfDay::MIDNIGHT),
        _ => {}
    }

    // split "2:30pm" / "2:30 pm" / "2 p.m." into clock part and meridiem
    let split_at = norm
        .find(|c: char| !(c.is_ascii_digit() || c == ':'))
        .unwrap_or(norm.len());
    let (clock, suffix) = norm.split_at(split_at);
    let suffix = suffix.trim();
    let meridiem = if suffix.is_empty() {
        None
    } else {
        Some(parse_meridiem(suffix).ok_or_else(unrecognized)?)
    };

    let (hour_str, minute_str) = match clock.split_once(':') {
        Some((h, m)) => (h, Some(m)),
        None => (clock, None),
    };
    if hour_str.is_empty() || hour_str.len() > 2 {
        return Err(unrecognized());
    }
    let hour: u32 = hour_str.parse().map_err(|_| unrecognized())?;
    let minute: u32 = match minute_str {
        Some(m) if m.len() == 2 => m.parse().map_err(|_| unrecognized())?,
        Some(_) => return Err(unrecognized()),
        None => 0,
    };
    if minute >= 60 {
        return Err(unrecognized());
    }

    let hour24 = match meridiem {
        Some(m) => {
            if !(1..=12).contains(&hour) {
                return Err(TemporalError::HourOutOfRange {
                    expr: expr.to_string(),
                    hour,
                });
            }
            match (m, hour) {
                (Meridiem::Am, 12) => 0,
                (Meridiem::Am, h) => h,
                (Meridiem::Pm, 12) => 12,
                (Meridiem::Pm, h) => h + 12,
            }
        }
        None => match hour {
            1..=7 => hour + 12,
            0 | 8..=23 => hour,
            _ => {
                return Err(TemporalError::HourOutOfRange {
                    expr: expr.to_string(),
                    hour,
                })
            }
        },
    };
    TimeOfDay::from_hm(hour24, minute).ok_or_else(unrecognized)
}

/// Maps a wall-clock time to an instant in `zone`.
pub fn localize(zone: Tz, wall: NaiveDateTime) -> Result<DateTime<Tz>, TemporalError> {
    // DST gaps are at most a few hours; walk forward a minute at a time.
    for step in 0..=24 * 60 {
        let candidate = wall + Duration::minutes(step);
        if let Some(t) = zone.from_local_datetime(&candidate).earliest() {
            return Ok(t);
        }
    }
    Err(TemporalError::NoLocalTime(wall.to_string()))
}

/// Start and end instants for an intent.
pub fn resolve_window(
    intent: &SchedulingIntent,
    clock: &ReferenceClock,
    defaults: &WindowDefaults,
) -> Result<(DateTime<Tz>, DateTime<Tz>), TemporalError> {
    if !intent.is_resolvable() {
        return Err(TemporalError::NoTemporalExpression);
    }
    let date = match &intent.date_expression {
        Some(expr) => resolve_date(expr, clock.today())?,
        None => clock.today(),
    };
    let time = match &intent.time_expression {
        Some(expr) => resolve_time(expr)?,
        None => defaults.default_start_time,
    };
    let minutes = intent
        .duration_minutes
        .unwrap_or(defaults.default_duration_minutes);
    let start = localize(clock.timezone.0, date.and_time(time.to_naive()))?;
    let end = start + Duration::minutes(i64::from(minutes));
    Ok((start, end))
}

/// Convenience wrapper producing a [`ResolvedEvent`] with its derived title.
pub fn resolve_event(
    intent: &SchedulingIntent,
    clock: &ReferenceClock,
    defaults: &WindowDefaults,
) -> Result<ResolvedEvent, TemporalError> {
    let (start, end) = resolve_window(intent, clock, defaults)?;
    Ok(ResolvedEvent::new(
        intent.clone(),
        start.fixed_offset(),
        end.fixed_offset(),
    )?)
}
