//! Order-based timestamp parsing.
//!
//! A [`FormatOrder`] lists the calendar components in the order they occur
//! in the text (`"ymdHMS"`, `"dmyHM"`, ...). Parsing ignores separators:
//! every maximal run of ASCII digits is one field, assigned to the
//! components left to right. Trailing time components may be omitted and
//! default to zero.
//!
//! All instants are UTC with second resolution.

use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use serde::de::{self, Visitor};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

/// One calendar component of a format order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Component {
    Year,
    Month,
    Day,
    Hour,
    Minute,
    Second,
}

impl Component {
    fn letter(self) -> char {
        match self {
            Component::Year => 'y',
            Component::Month => 'm',
            Component::Day => 'd',
            Component::Hour => 'H',
            Component::Minute => 'M',
            Component::Second => 'S',
        }
    }

    fn is_time(self) -> bool {
        matches!(self, Component::Hour | Component::Minute | Component::Second)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum FormatError {
    #[error("unknown format component '{0}'")]
    UnknownComponent(char),
    #[error("format component '{0}' appears more than once")]
    DuplicateComponent(char),
    #[error("format is missing the date component '{0}'")]
    MissingDateComponent(char),
    #[error("time components must appear as H, then M, then S")]
    BadTimeOrder,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ParseError {
    #[error("expected {expected} numeric fields, found {found}")]
    FieldCountMismatch { expected: usize, found: usize },
    #[error("{component} value {value} is out of range")]
    OutOfRangeField { component: char, value: u64 },
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ColumnError {
    #[error("no format order was supplied")]
    NoOrders,
    #[error("no format order parses any row")]
    NoOrderParsesAnything,
}

/// Ordered list of calendar components, validated on construction.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct FormatOrder {
    components: Vec<Component>,
}

impl FormatOrder {
    pub fn components(&self) -> &[Component] {
        &self.components
    }

    /// Number of leading components that must be present in the text.
    /// Everything after the last date component is optional.
    fn required_fields(&self) -> usize {
        self.components
            .iter()
            .rposition(|c| !c.is_time())
            .map_or(0, |p| p + 1)
    }
}

impl fmt::Display for FormatOrder {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for c in &self.components {
            write!(f, "{}", c.letter())?;
        }
        Ok(())
    }
}

impl core::str::FromStr for FormatOrder {
    type Err = FormatError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        parse_format_order(s)
    }
}

/// Parses a compact format order such as `"ymdHMs"`.
///
/// `S` and `s` both mean seconds. The date components `y`, `m` and `d`
/// are mandatory; the time components must appear as a prefix of `HMS`.
pub fn parse_format_order(spec: &str) -> Result<FormatOrder, FormatError> {
    let mut components = Vec::with_capacity(6);
    for ch in spec.chars() {
        let c = match ch {
            'y' => Component::Year,
            'm' => Component::Month,
            'd' => Component::Day,
            'H' => Component::Hour,
            'M' => Component::Minute,
            'S' | 's' => Component::Second,
            other => return Err(FormatError::UnknownComponent(other)),
        };
        if components.contains(&c) {
            return Err(FormatError::DuplicateComponent(c.letter()));
        }
        components.push(c);
    }
    for date in [Component::Year, Component::Month, Component::Day] {
        if !components.contains(&date) {
            return Err(FormatError::MissingDateComponent(date.letter()));
        }
    }
    let times: Vec<Component> = components.iter().copied().filter(|c| c.is_time()).collect();
    let prefix = [Component::Hour, Component::Minute, Component::Second];
    if times[..] != prefix[..times.len()] {
        return Err(FormatError::BadTimeOrder);
    }
    Ok(FormatOrder { components })
}

/// A UTC instant with second resolution.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Instant(pub i64);

impl Instant {
    pub const fn from_seconds(seconds: i64) -> Self {
        Instant(seconds)
    }

    pub const fn seconds(self) -> i64 {
        self.0
    }

    /// Builds an instant from a validated calendar date and time.
    pub fn from_civil(civil: Civil) -> Self {
        let days = days_from_civil(civil.year, civil.month, civil.day);
        Instant(
            days * 86_400
                + i64::from(civil.hour) * 3600
                + i64::from(civil.minute) * 60
                + i64::from(civil.second),
        )
    }

    pub fn to_civil(self) -> Civil {
        let days = self.0.div_euclid(86_400);
        let secs = self.0.rem_euclid(86_400);
        let (year, month, day) = civil_from_days(days);
        Civil {
            year,
            month,
            day,
            hour: (secs / 3600) as u32,
            minute: (secs % 3600 / 60) as u32,
            second: (secs % 60) as u32,
        }
    }

    /// `YYYY-MM-DDTHH:MM:SSZ`
    pub fn to_iso8601(self) -> String {
        alloc::format!("{}", self)
    }

    /// `YYYY-MM-DD HH:MM:SS`, the layout used in reports.
    pub fn to_display(self) -> String {
        let c = self.to_civil();
        alloc::format!(
            "{:04}-{:02}-{:02} {:02}:{:02}:{:02}",
            c.year,
            c.month,
            c.day,
            c.hour,
            c.minute,
            c.second
        )
    }

    /// Parses the ISO-8601 rendering produced by [`Instant::to_iso8601`].
    pub fn parse_iso8601(text: &str) -> Result<Self, ParseError> {
        parse_timestamp(text, &iso_order())
    }
}

impl fmt::Display for Instant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let c = self.to_civil();
        write!(
            f,
            "{:04}-{:02}-{:02}T{:02}:{:02}:{:02}Z",
            c.year, c.month, c.day, c.hour, c.minute, c.second
        )
    }
}

impl Serialize for Instant {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Instant {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        struct IsoVisitor;

        impl Visitor<'_> for IsoVisitor {
            type Value = Instant;

            fn expecting(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str("an ISO-8601 UTC timestamp")
            }

            fn visit_str<E: de::Error>(self, v: &str) -> Result<Instant, E> {
                Instant::parse_iso8601(v).map_err(E::custom)
            }
        }

        deserializer.deserialize_str(IsoVisitor)
    }
}

fn iso_order() -> FormatOrder {
    FormatOrder {
        components: alloc::vec![
            Component::Year,
            Component::Month,
            Component::Day,
            Component::Hour,
            Component::Minute,
            Component::Second,
        ],
    }
}

/// Broken-down calendar time.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Civil {
    pub year: i64,
    pub month: u32,
    pub day: u32,
    pub hour: u32,
    pub minute: u32,
    pub second: u32,
}

pub fn is_leap_year(year: i64) -> bool {
    (year % 4 == 0 && year % 100 != 0) || year % 400 == 0
}

pub fn days_in_month(year: i64, month: u32) -> u32 {
    match month {
        1 | 3 | 5 | 7 | 8 | 10 | 12 => 31,
        4 | 6 | 9 | 11 => 30,
        2 if is_leap_year(year) => 29,
        2 => 28,
        _ => 0,
    }
}

// Howard Hinnant's days_from_civil / civil_from_days.
pub(crate) fn days_from_civil(year: i64, month: u32, day: u32) -> i64 {
    let y = if month <= 2 { year - 1 } else { year };
    let era = y.div_euclid(400);
    let yoe = y - era * 400;
    let m = i64::from(month);
    let doy = (153 * (if m > 2 { m - 3 } else { m + 9 }) + 2) / 5 + i64::from(day) - 1;
    let doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
    era * 146_097 + doe - 719_468
}

pub(crate) fn civil_from_days(days: i64) -> (i64, u32, u32) {
    let z = days + 719_468;
    let era = z.div_euclid(146_097);
    let doe = z - era * 146_097;
    let yoe = (doe - doe / 1460 + doe / 36_524 - doe / 146_096) / 365;
    let doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
    let mp = (5 * doy + 2) / 153;
    let day = (doy - (153 * mp + 2) / 5 + 1) as u32;
    let month = if mp < 10 { mp + 3 } else { mp - 9 } as u32;
    let year = yoe + era * 400 + i64::from(month <= 2);
    (year, month, day)
}

/// Parses `text` under `order`.
///
/// Digits are collected as maximal runs; everything else is a separator.
/// Missing trailing time fields default to zero. One- and two-digit years
/// pivot at 69: `00..=68` map to 2000-2068 and `69..=99` to 1969-1999.
pub fn parse_timestamp(text: &str, order: &FormatOrder) -> Result<Instant, ParseError> {
    let mut fields: [(u64, usize); 6] = [(0, 0); 6];
    let mut found = 0usize;
    let mut current: Option<(u64, usize)> = None;
    let expected = order.components.len();

    let mut flush = |run: (u64, usize), found: &mut usize| -> Result<(), ParseError> {
        if *found < expected {
            fields[*found] = run;
        }
        *found += 1;
        Ok(())
    };

    for b in text.bytes() {
        if b.is_ascii_digit() {
            let d = u64::from(b - b'0');
            let (v, len) = current.unwrap_or((0, 0));
            // Saturate so absurdly long runs end up out of range.
            current = Some((v.saturating_mul(10).saturating_add(d), len + 1));
        } else if let Some(run) = current.take() {
            flush(run, &mut found)?;
        }
    }
    if let Some(run) = current.take() {
        flush(run, &mut found)?;
    }

    if found > expected || found < order.required_fields() {
        return Err(ParseError::FieldCountMismatch { expected, found });
    }

    let mut civil = Civil {
        year: 0,
        month: 0,
        day: 0,
        hour: 0,
        minute: 0,
        second: 0,
    };
    for (component, &(value, len)) in order.components.iter().zip(&fields[..found]) {
        let out_of_range = || ParseError::OutOfRangeField {
            component: component.letter(),
            value,
        };
        match component {
            Component::Year => {
                civil.year = if len <= 2 {
                    if value <= 68 {
                        2000 + value as i64
                    } else {
                        1900 + value as i64
                    }
                } else if value <= 9999 {
                    value as i64
                } else {
                    return Err(out_of_range());
                };
            }
            Component::Month => {
                if !(1..=12).contains(&value) {
                    return Err(out_of_range());
                }
                civil.month = value as u32;
            }
            Component::Day => {
                if !(1..=31).contains(&value) {
                    return Err(out_of_range());
                }
                civil.day = value as u32;
            }
            Component::Hour => {
                if value > 23 {
                    return Err(out_of_range());
                }
                civil.hour = value as u32;
            }
            Component::Minute => {
                if value > 59 {
                    return Err(out_of_range());
                }
                civil.minute = value as u32;
            }
            Component::Second => {
                if value > 59 {
                    return Err(out_of_range());
                }
                civil.second = value as u32;
            }
        }
    }
    if civil.day > days_in_month(civil.year, civil.month) {
        return Err(ParseError::OutOfRangeField {
            component: 'd',
            value: u64::from(civil.day),
        });
    }
    Ok(Instant::from_civil(civil))
}

/// Result of parsing a whole column under the best of several orders.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParsedColumn {
    pub instants: Vec<Option<Instant>>,
    pub chosen_order: FormatOrder,
    pub failure_indices: Vec<usize>,
}

/// Parses every text under each candidate order and keeps the order that
/// parses the most rows. Ties go to the order listed first.
pub fn parse_column<S: AsRef<str>>(
    texts: &[S],
    orders: &[FormatOrder],
) -> Result<ParsedColumn, ColumnError> {
    let mut best: Option<(usize, Vec<Option<Instant>>, &FormatOrder)> = None;
    for order in orders {
        let parsed: Vec<Option<Instant>> = texts
            .iter()
            .map(|t| parse_timestamp(t.as_ref(), order).ok())
            .collect();
        let count = parsed.iter().filter(|p| p.is_some()).count();
        if best.as_ref().is_none_or(|(c, _, _)| count > *c) {
            best = Some((count, parsed, order));
        }
    }
    let (count, instants, order) = best.ok_or(ColumnError::NoOrders)?;
    if count == 0 {
        return Err(ColumnError::NoOrderParsesAnything);
    }
    let failure_indices = instants
        .iter()
        .enumerate()
        .filter_map(|(i, p)| p.is_none().then_some(i))
        .collect();
    Ok(ParsedColumn {
        instants,
        chosen_order: order.clone(),
        failure_indices,
    })
}

/// Renders `instant` so that [`parse_timestamp`] with `order` reads it back.
pub fn render(instant: Instant, order: &FormatOrder) -> String {
    use core::fmt::Write;

    let c = instant.to_civil();
    let mut out = String::new();
    for (i, component) in order.components.iter().enumerate() {
        if i > 0 {
            out.push(if component.is_time() { ':' } else { '-' });
        }
        let _ = match component {
            Component::Year => write!(out, "{:04}", c.year),
            Component::Month => write!(out, "{:02}", c.month),
            Component::Day => write!(out, "{:02}", c.day),
            Component::Hour => write!(out, "{:02}", c.hour),
            Component::Minute => write!(out, "{:02}", c.minute),
            Component::Second => write!(out, "{:02}", c.second),
        };
    }
    out
}
