//! UTC timestamp helpers. All timestamps in the engine are whole seconds
//! since the Unix epoch.

use chrono::{DateTime, Datelike, NaiveDateTime, Timelike, Utc, Weekday};

pub const MINUTES_PER_DAY: u32 = 1440;
const SECONDS_PER_DAY: i64 = 86_400;

/// Parses RFC 3339 / ISO 8601 date-times. Naive inputs are taken as UTC and
/// fractional seconds are truncated.
pub fn parse_iso8601(text: &str) -> Option<i64> {
    let text = text.trim();
    if let Ok(dt) = DateTime::parse_from_rfc3339(text) {
        return Some(dt.timestamp());
    }
    [
        "%Y-%m-%dT%H:%M:%S%.f",
        "%Y-%m-%d %H:%M:%S%.f",
        "%Y-%m-%dT%H:%M",
    ]
    .iter()
    .find_map(|fmt| NaiveDateTime::parse_from_str(text, fmt).ok())
    .map(|dt| dt.and_utc().timestamp())
}

pub fn format_iso8601(timestamp: i64) -> String {
    match DateTime::<Utc>::from_timestamp(timestamp, 0) {
        Some(dt) => dt.format("%Y-%m-%dT%H:%M:%SZ").to_string(),
        None => timestamp.to_string(),
    }
}

pub fn minute_of_day(timestamp: i64) -> u32 {
    (timestamp.rem_euclid(SECONDS_PER_DAY) / 60) as u32
}

/// Days since the epoch (UTC).
pub fn day_number(timestamp: i64) -> i64 {
    timestamp.div_euclid(SECONDS_PER_DAY)
}

pub fn is_weekend(timestamp: i64) -> bool {
    DateTime::<Utc>::from_timestamp(timestamp, 0)
        .map(|dt| matches!(dt.weekday(), Weekday::Sat | Weekday::Sun))
        .unwrap_or(false)
}

/// Formats a minute of day as `HH:MM`.
pub fn format_minute(minute: u32) -> String {
    format!("{:02}:{:02}", minute / 60, minute % 60)
}

/// Parses `HH:MM` into a minute of day.
pub fn parse_minute(text: &str) -> Option<u32> {
    let t = chrono::NaiveTime::parse_from_str(text.trim(), "%H:%M").ok()?;
    Some(t.hour() * 60 + t.minute())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_common_forms() {
        let z = parse_iso8601("2011-11-28T02:27:59Z").unwrap();
        assert_eq!(parse_iso8601("2011-11-28 02:27:59"), Some(z));
        assert_eq!(parse_iso8601("2011-11-28T02:27:59.875"), Some(z));
        assert_eq!(parse_iso8601("2011-11-28T03:27:59+01:00"), Some(z));
        assert_eq!(format_iso8601(z), "2011-11-28T02:27:59Z");
        assert!(parse_iso8601("yesterday").is_none());
    }

    #[test]
    fn calendar_helpers() {
        let t = parse_iso8601("2011-12-03T23:50:00Z").unwrap(); // Saturday
        assert_eq!(minute_of_day(t), 23 * 60 + 50);
        assert!(is_weekend(t));
        assert!(!is_weekend(t - 86_400 * 2));
        assert_eq!(parse_minute("08:30"), Some(510));
        assert_eq!(format_minute(510), "08:30");
    }
}
