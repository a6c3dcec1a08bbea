//! Calendar-day primitives shared by every stage of the pipeline.

use std::fmt;
use std::str::FromStr;

use chrono::{DateTime, FixedOffset, NaiveDate, Utc};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum DateError {
    #[error("invalid date range {0:?}: expected START:END with ISO dates")]
    BadRange(String),
    #[error("date range {start}..{end} is empty")]
    EmptyRange { start: NaiveDate, end: NaiveDate },
    #[error("invalid UTC offset {0:?}: expected +HH:MM or -HH:MM")]
    BadOffset(String),
}

/// Inclusive range of calendar dates. Serialized as `START:END`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct DateRange {
    pub start: NaiveDate,
    pub end: NaiveDate,
}

impl DateRange {
    pub fn new(start: NaiveDate, end: NaiveDate) -> Result<Self, DateError> {
        if end < start {
            return Err(DateError::EmptyRange { start, end });
        }
        Ok(Self { start, end })
    }

    /// Number of days covered, counting both endpoints.
    pub fn len(&self) -> usize {
        ((self.end - self.start).num_days() + 1) as usize
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn contains(&self, date: NaiveDate) -> bool {
        self.start <= date && date <= self.end
    }

    pub fn days(&self) -> impl Iterator<Item = NaiveDate> + '_ {
        self.start.iter_days().take(self.len())
    }

    pub fn overlaps(&self, other: &DateRange) -> bool {
        self.start <= other.end && other.start <= self.end
    }

    /// Index of `date` relative to `start`, if inside the range.
    pub fn offset_of(&self, date: NaiveDate) -> Option<usize> {
        self.contains(date)
            .then(|| (date - self.start).num_days() as usize)
    }
}

impl fmt::Display for DateRange {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.start, self.end)
    }
}

impl FromStr for DateRange {
    type Err = DateError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || DateError::BadRange(s.to_string());
        let (a, b) = s.split_once(':').ok_or_else(bad)?;
        let start = NaiveDate::parse_from_str(a.trim(), "%Y-%m-%d").map_err(|_| bad())?;
        let end = NaiveDate::parse_from_str(b.trim(), "%Y-%m-%d").map_err(|_| bad())?;
        DateRange::new(start, end)
    }
}

impl TryFrom<String> for DateRange {
    type Error = DateError;

    fn try_from(s: String) -> Result<Self, Self::Error> {
        s.parse()
    }
}

impl From<DateRange> for String {
    fn from(r: DateRange) -> Self {
        r.to_string()
    }
}

/// Fixed offset from UTC used when bucketing timestamps into calendar days.
/// Defaults to UTC.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(try_from = "i32", into = "i32")]
pub struct DayOffset {
    seconds: i32,
}

impl DayOffset {
    pub const UTC: DayOffset = DayOffset { seconds: 0 };

    pub fn from_seconds(seconds: i32) -> Result<Self, DateError> {
        FixedOffset::east_opt(seconds)
            .map(|_| Self { seconds })
            .ok_or_else(|| DateError::BadOffset(seconds.to_string()))
    }

    pub fn seconds(&self) -> i32 {
        self.seconds
    }

    pub fn date_of(&self, ts: &DateTime<Utc>) -> NaiveDate {
        // validated in the constructor
        let off = FixedOffset::east_opt(self.seconds).expect("valid offset");
        ts.with_timezone(&off).date_naive()
    }
}

impl TryFrom<i32> for DayOffset {
    type Error = DateError;

    fn try_from(seconds: i32) -> Result<Self, Self::Error> {
        Self::from_seconds(seconds)
    }
}

impl From<DayOffset> for i32 {
    fn from(o: DayOffset) -> Self {
        o.seconds
    }
}

impl FromStr for DayOffset {
    type Err = DateError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || DateError::BadOffset(s.to_string());
        let t = s.trim();
        if t.eq_ignore_ascii_case("z") || t.eq_ignore_ascii_case("utc") {
            return Ok(Self::UTC);
        }
        let (sign, rest) = match t.as_bytes().first() {
            Some(b'+') => (1, &t[1..]),
            Some(b'-') => (-1, &t[1..]),
            _ => return Err(bad()),
        };
        let (h, m) = rest.split_once(':').ok_or_else(bad)?;
        let h: i32 = h.parse().map_err(|_| bad())?;
        let m: i32 = m.parse().map_err(|_| bad())?;
        if !(0..=23).contains(&h) || !(0..=59).contains(&m) {
            return Err(bad());
        }
        Self::from_seconds(sign * (h * 3600 + m * 60))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use chrono::TimeZone;

    fn d(y: i32, m: u32, day: u32) -> NaiveDate {
        NaiveDate::from_ymd_opt(y, m, day).unwrap()
    }

    #[test]
    fn range_parse_and_len() {
        let r: DateRange = "2020-02-01:2020-04-30".parse().unwrap();
        assert_eq!(r.len(), 90);
        assert_eq!(r.days().count(), 90);
        assert_eq!(r.offset_of(d(2020, 2, 29)), Some(28));
        assert!("2020-03-01:2020-02-01".parse::<DateRange>().is_err());
        assert!("2020-03-01".parse::<DateRange>().is_err());
    }

    #[test]
    fn offset_bucketing() {
        let ts = Utc.with_ymd_and_hms(2020, 2, 1, 23, 30, 0).unwrap();
        assert_eq!(DayOffset::UTC.date_of(&ts), d(2020, 2, 1));
        let cet: DayOffset = "+01:00".parse().unwrap();
        assert_eq!(cet.date_of(&ts), d(2020, 2, 2));
        let west: DayOffset = "-05:00".parse().unwrap();
        assert_eq!(west.seconds(), -18000);
        assert!("0100".parse::<DayOffset>().is_err());
        assert_eq!(serde_json::to_string(&cet).unwrap(), "3600");
        assert!(serde_json::from_str::<DayOffset>("999999").is_err());
    }

    #[test]
    fn range_serde_string_form() {
        let r: DateRange = serde_json::from_str(r#""2020-02-01:2020-02-29""#).unwrap();
        assert_eq!(r.len(), 29);
        assert_eq!(serde_json::to_string(&r).unwrap(), r#""2020-02-01:2020-02-29""#);
        assert!(serde_json::from_str::<DateRange>(r#""2020-02-29:2020-02-01""#).is_err());
    }
}
