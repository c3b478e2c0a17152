//! Micro-scale windows over a cleaned series.

use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;
use core::ops::Range;
use core::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::series::{AnnotatedPoint, CleanResult};
use crate::stats::{summary_stats, Summary};
use crate::time::{days_in_month, Civil, Instant};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum WindowError {
    #[error("bad interval '{0}': expected a count or '<n> <unit>'")]
    BadSpec(String),
    #[error("the cleaned series is empty")]
    EmptySeries,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Unit {
    Second,
    Minute,
    Hour,
    Day,
    Week,
    Month,
    Year,
}

impl Unit {
    fn seconds(self) -> Option<i64> {
        match self {
            Unit::Second => Some(1),
            Unit::Minute => Some(60),
            Unit::Hour => Some(3600),
            Unit::Day => Some(86_400),
            Unit::Week => Some(604_800),
            Unit::Month | Unit::Year => None,
        }
    }

    fn name(self) -> &'static str {
        match self {
            Unit::Second => "second",
            Unit::Minute => "minute",
            Unit::Hour => "hour",
            Unit::Day => "day",
            Unit::Week => "week",
            Unit::Month => "month",
            Unit::Year => "year",
        }
    }
}

/// How to cut the series: fixed point counts or calendar spans.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum IntervalSpec {
    Count(usize),
    Span { quantity: u32, unit: Unit },
}

impl FromStr for IntervalSpec {
    type Err = WindowError;

    /// Accepts `10`, `1 month`, `3 months`, `14 days` or a bare unit.
    fn from_str(s: &str) -> Result<Self, WindowError> {
        let bad = || WindowError::BadSpec(s.to_string());
        let parts: Vec<&str> = s.split_whitespace().collect();
        let (quantity, unit) = match parts.as_slice() {
            [n] if n.bytes().all(|b| b.is_ascii_digit()) => {
                let n: usize = n.parse().map_err(|_| bad())?;
                return if n == 0 { Err(bad()) } else { Ok(IntervalSpec::Count(n)) };
            }
            [unit] => (1, *unit),
            [n, unit] => (n.parse::<u32>().map_err(|_| bad())?, *unit),
            _ => return Err(bad()),
        };
        if quantity == 0 {
            return Err(bad());
        }
        let lower = unit.to_ascii_lowercase();
        let singular = lower.strip_suffix('s').unwrap_or(&lower);
        let unit = match singular {
            "sec" | "second" => Unit::Second,
            "min" | "minute" => Unit::Minute,
            "hour" => Unit::Hour,
            "day" => Unit::Day,
            "week" => Unit::Week,
            "month" => Unit::Month,
            "year" => Unit::Year,
            _ => return Err(bad()),
        };
        Ok(IntervalSpec::Span { quantity, unit })
    }
}

impl fmt::Display for IntervalSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            IntervalSpec::Count(n) => write!(f, "{n}"),
            IntervalSpec::Span { quantity, unit } => {
                write!(f, "{quantity} {}{}", unit.name(), if *quantity == 1 { "" } else { "s" })
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WindowSummary {
    pub stats: Option<Summary>,
    pub n_missing_imputed: usize,
    pub n_outliers: usize,
    pub n_missing_ts: usize,
    pub n_duplicate_ts: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Window {
    pub index: usize,
    /// Position of the first point in `clean_data`.
    pub offset: usize,
    pub len: usize,
    pub start: Instant,
    /// Time of the last point in the window.
    pub end: Instant,
    pub summary: WindowSummary,
}

impl Window {
    pub fn range(&self) -> Range<usize> {
        self.offset..self.offset + self.len
    }

    pub fn points<'a>(&self, result: &'a CleanResult) -> &'a [AnnotatedPoint] {
        &result.clean_data[self.range()]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WindowSet {
    pub spec: IntervalSpec,
    pub windows: Vec<Window>,
}

/// `anchor` moved forward by `months` calendar months, clamping the day.
pub fn add_months(anchor: Instant, months: i64) -> Instant {
    let c = anchor.to_civil();
    let total = c.year * 12 + (c.month as i64 - 1) + months;
    let year = total.div_euclid(12);
    let month = (total.rem_euclid(12) + 1) as u32;
    Instant::from_civil(Civil {
        year,
        month,
        day: c.day.min(days_in_month(year, month)),
        ..c
    })
}

fn boundary(anchor: Instant, spec: IntervalSpec, k: i64) -> Instant {
    match spec {
        IntervalSpec::Count(_) => unreachable!("count windows have no time boundaries"),
        IntervalSpec::Span { quantity, unit } => match unit.seconds() {
            Some(s) => Instant(anchor.0 + k * quantity as i64 * s),
            None => {
                let months = if unit == Unit::Year { 12 } else { 1 };
                add_months(anchor, k * quantity as i64 * months)
            }
        },
    }
}

fn count_in(instants: &[Instant], start: Instant, end: Instant) -> usize {
    let lo = instants.partition_point(|t| *t < start);
    let hi = instants.partition_point(|t| *t <= end);
    hi - lo
}

fn summarize(result: &CleanResult, range: Range<usize>) -> WindowSummary {
    let points = &result.clean_data[range];
    let start = points[0].time;
    let end = points[points.len() - 1].time;
    WindowSummary {
        stats: summary_stats(points.iter().map(|p| &p.value)),
        n_missing_imputed: points
            .iter()
            .filter(|p| p.missing_type.is_some() && p.value.is_some())
            .count(),
        n_outliers: points.iter().filter(|p| p.is_outlier).count(),
        n_missing_ts: count_in(&result.missing_ts, start, end),
        n_duplicate_ts: count_in(&result.duplicate_ts, start, end),
    }
}

/// Splits the cleaned series into consecutive windows.
///
/// Span windows start at the first timestamp and advance by whole spans;
/// months and years use calendar arithmetic from that anchor. Spans that
/// hold no point produce no window.
pub fn split_windows(result: &CleanResult, spec: IntervalSpec) -> Result<WindowSet, WindowError> {
    let data = &result.clean_data;
    if data.is_empty() {
        return Err(WindowError::EmptySeries);
    }
    let mut ranges: Vec<Range<usize>> = Vec::new();
    match spec {
        IntervalSpec::Count(0) => return Err(WindowError::BadSpec(spec.to_string())),
        IntervalSpec::Count(n) => {
            let mut i = 0;
            while i < data.len() {
                ranges.push(i..(i + n).min(data.len()));
                i += n;
            }
        }
        IntervalSpec::Span { quantity: 0, .. } => return Err(WindowError::BadSpec(spec.to_string())),
        IntervalSpec::Span { .. } => {
            let anchor = data[0].time;
            let mut k = 0i64;
            let mut i = 0;
            while i < data.len() {
                let next = boundary(anchor, spec, k + 1);
                let end = i + data[i..].partition_point(|p| p.time < next);
                if end > i {
                    ranges.push(i..end);
                    i = end;
                    k += 1;
                } else {
                    // jump straight to the span holding the next point
                    let t = data[i].time;
                    let mut step = 1i64;
                    while boundary(anchor, spec, k + step) <= t {
                        step *= 2;
                    }
                    let (mut lo, mut hi) = (k + step / 2, k + step);
                    while hi - lo > 1 {
                        let mid = lo + (hi - lo) / 2;
                        if boundary(anchor, spec, mid) <= t {
                            lo = mid;
                        } else {
                            hi = mid;
                        }
                    }
                    k = lo;
                }
            }
        }
    }
    let windows = ranges
        .into_iter()
        .enumerate()
        .map(|(index, r)| Window {
            index,
            offset: r.start,
            len: r.len(),
            start: data[r.start].time,
            end: data[r.end - 1].time,
            summary: summarize(result, r),
        })
        .collect();
    Ok(WindowSet { spec, windows })
}
