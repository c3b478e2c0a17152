//! Data model shared by every stage: raw tables, regular series, the
//! annotated cleaning result and its change log.

use alloc::collections::BTreeSet;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;

use serde::de::{MapAccess, Visitor};
use serde::ser::SerializeMap;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::benchmark::classify_gaps;
use crate::time::Instant;

/// Identifier of an imputation method, e.g. `na_kalman`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct MethodId(pub String);

impl MethodId {
    pub fn new(id: impl Into<String>) -> Self {
        MethodId(id.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for MethodId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for MethodId {
    fn from(s: &str) -> Self {
        MethodId(s.to_string())
    }
}

/// Missingness mechanism of a gap.
///
/// Isolated single-point gaps are treated as MCAR and runs of two or more
/// consecutive gaps as MAR.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mechanism {
    Mcar,
    Mar,
}

impl fmt::Display for Mechanism {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Mechanism::Mcar => "MCAR",
            Mechanism::Mar => "MAR",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum TableError {
    #[error("a table needs at least 2 columns, found {0}")]
    TooFewColumns(usize),
    #[error("column names ({names}) do not match column count ({columns})")]
    NameCountMismatch { names: usize, columns: usize },
    #[error("column {column} has {found} rows, expected {expected}")]
    RaggedColumns {
        column: usize,
        expected: usize,
        found: usize,
    },
}

/// Untyped table as read from CSV: every cell is a string.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RawTable {
    column_names: Vec<String>,
    columns: Vec<Vec<String>>,
}

impl RawTable {
    pub fn new(column_names: Vec<String>, columns: Vec<Vec<String>>) -> Result<Self, TableError> {
        if columns.len() < 2 {
            return Err(TableError::TooFewColumns(columns.len()));
        }
        if column_names.len() != columns.len() {
            return Err(TableError::NameCountMismatch {
                names: column_names.len(),
                columns: columns.len(),
            });
        }
        let expected = columns[0].len();
        if let Some((column, c)) = columns.iter().enumerate().find(|(_, c)| c.len() != expected) {
            return Err(TableError::RaggedColumns {
                column,
                expected,
                found: c.len(),
            });
        }
        Ok(RawTable {
            column_names,
            columns,
        })
    }

    /// Builds a table from row-major records.
    pub fn from_rows(column_names: Vec<String>, rows: Vec<Vec<String>>) -> Result<Self, TableError> {
        let width = column_names.len();
        let mut columns: Vec<Vec<String>> = (0..width).map(|_| Vec::with_capacity(rows.len())).collect();
        for (r, row) in rows.into_iter().enumerate() {
            if row.len() != width {
                return Err(TableError::RaggedColumns {
                    column: r,
                    expected: width,
                    found: row.len(),
                });
            }
            for (col, cell) in columns.iter_mut().zip(row) {
                col.push(cell);
            }
        }
        RawTable::new(column_names, columns)
    }

    pub fn column_names(&self) -> &[String] {
        &self.column_names
    }

    pub fn columns(&self) -> &[Vec<String>] {
        &self.columns
    }

    pub fn row_count(&self) -> usize {
        self.columns[0].len()
    }

    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.column_names.iter().position(|n| n == name)
    }
}

/// Points before timeline repair: unordered, possibly duplicated.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct RawSeries {
    pub points: Vec<(Instant, Option<f64>)>,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum SeriesError {
    #[error("a series needs at least 2 points, found {0}")]
    TooShort(usize),
    #[error("sampling interval must be positive, got {0}")]
    BadInterval(i64),
}

/// Regular series: value `k` sits at `start + k * interval`.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeSeries {
    start: Instant,
    interval: i64,
    values: Vec<Option<f64>>,
}

impl TimeSeries {
    pub fn new(start: Instant, interval: i64, values: Vec<Option<f64>>) -> Result<Self, SeriesError> {
        if interval <= 0 {
            return Err(SeriesError::BadInterval(interval));
        }
        if values.len() < 2 {
            return Err(SeriesError::TooShort(values.len()));
        }
        Ok(TimeSeries {
            start,
            interval,
            values,
        })
    }

    pub fn start(&self) -> Instant {
        self.start
    }

    pub fn interval(&self) -> i64 {
        self.interval
    }

    pub fn values(&self) -> &[Option<f64>] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn time_at(&self, index: usize) -> Instant {
        Instant(self.start.0 + self.interval * index as i64)
    }

    pub fn end(&self) -> Instant {
        self.time_at(self.values.len() - 1)
    }

    pub fn into_values(self) -> Vec<Option<f64>> {
        self.values
    }

    /// The same points as an unrepaired series.
    pub fn to_raw(&self) -> RawSeries {
        RawSeries {
            points: self
                .values
                .iter()
                .enumerate()
                .map(|(i, v)| (self.time_at(i), *v))
                .collect(),
        }
    }
}

/// One cleaned observation with its provenance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnnotatedPoint {
    pub time: Instant,
    /// Absent only for points whose imputation was reverted.
    pub value: Option<f64>,
    pub missing_type: Option<Mechanism>,
    pub method_used: Option<MethodId>,
    pub is_outlier: bool,
    pub orig_value: Option<f64>,
}

impl AnnotatedPoint {
    pub fn observed(time: Instant, value: f64) -> Self {
        AnnotatedPoint {
            time,
            value: Some(value),
            missing_type: None,
            method_used: None,
            is_outlier: false,
            orig_value: None,
        }
    }
}

/// Per-method benchmark scores (RMSE), in configured method order.
///
/// Serialized as a JSON object keyed by method id. Order is preserved and
/// a method listed twice keeps both entries.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ErrorRow {
    entries: Vec<(MethodId, f64)>,
}

impl ErrorRow {
    pub fn new(entries: Vec<(MethodId, f64)>) -> Self {
        ErrorRow { entries }
    }

    pub fn entries(&self) -> &[(MethodId, f64)] {
        &self.entries
    }

    pub fn get(&self, id: &str) -> Option<f64> {
        self.entries
            .iter()
            .find(|(m, _)| m.as_str() == id)
            .map(|(_, s)| *s)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

impl Serialize for ErrorRow {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        let mut map = serializer.serialize_map(Some(self.entries.len()))?;
        for (id, score) in &self.entries {
            map.serialize_entry(id, score)?;
        }
        map.end()
    }
}

impl<'de> Deserialize<'de> for ErrorRow {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        struct RowVisitor;

        impl<'de> Visitor<'de> for RowVisitor {
            type Value = ErrorRow;

            fn expecting(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str("a map from method id to score")
            }

            fn visit_map<A: MapAccess<'de>>(self, mut access: A) -> Result<ErrorRow, A::Error> {
                let mut entries = Vec::new();
                while let Some((k, v)) = access.next_entry::<MethodId, f64>()? {
                    entries.push((k, v));
                }
                Ok(ErrorRow { entries })
            }
        }

        deserializer.deserialize_map(RowVisitor)
    }
}

/// A detected outlier and what replaced it.
///
/// `method_used` is absent when outliers were only flagged, not replaced.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutlierRecord {
    pub time: Instant,
    pub value: f64,
    pub orig_value: f64,
    pub method_used: Option<MethodId>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ChangeKind {
    InsertedTimestamp,
    Deduplicated,
    ConflictingDuplicateNulled,
    ImputedMissing,
    OutlierReplaced,
    ValueCoercionFailed,
    TimestampParseFailed,
    /// The benchmark could not run and interpolation was used instead.
    BenchmarkSkipped,
}

impl ChangeKind {
    pub fn is_reversible(self) -> bool {
        matches!(self, ChangeKind::ImputedMissing | ChangeKind::OutlierReplaced)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChangeEntry {
    pub id: u64,
    pub kind: ChangeKind,
    pub time: Option<Instant>,
    pub before: Option<f64>,
    pub after: Option<f64>,
}

/// Everything `clean` produces.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CleanResult {
    pub clean_data: Vec<AnnotatedPoint>,
    pub missing_ts: Vec<Instant>,
    pub duplicate_ts: Vec<Instant>,
    pub imp_methods: Vec<MethodId>,
    pub mcar_err: Option<ErrorRow>,
    pub mar_err: Option<ErrorRow>,
    pub outliers: Vec<OutlierRecord>,
    pub outlier_mcar_err: Option<ErrorRow>,
    pub outlier_mar_err: Option<ErrorRow>,
    pub change_log: Vec<ChangeEntry>,
}

impl CleanResult {
    pub fn values(&self) -> Vec<Option<f64>> {
        self.clean_data.iter().map(|p| p.value).collect()
    }

    /// Points that were missing before imputation (and still carry a
    /// mechanism), whether filled or reverted.
    pub fn missing_count(&self, mechanism: Option<Mechanism>) -> usize {
        self.clean_data
            .iter()
            .filter(|p| match mechanism {
                Some(m) => p.missing_type == Some(m),
                None => p.missing_type.is_some(),
            })
            .count()
    }

    fn index_of(&self, time: Instant) -> Option<usize> {
        self.clean_data.binary_search_by_key(&time, |p| p.time).ok()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum RevertError {
    #[error("no change with id {0}")]
    UnknownChangeId(u64),
    #[error("change {id} ({kind:?}) cannot be reverted")]
    IrreversibleChange { id: u64, kind: ChangeKind },
}

/// Undoes imputations and outlier replacements.
///
/// Reverting an outlier replacement restores the original value and keeps
/// the point flagged as an outlier. Reverting an imputation makes the point
/// absent again; any later outlier replacement of that point goes with it.
/// Reverted entries leave the change log, and absent points are
/// re-classified by the gap classifier.
pub fn revert(result: &CleanResult, change_ids: &BTreeSet<u64>) -> Result<CleanResult, RevertError> {
    let mut targets = Vec::with_capacity(change_ids.len());
    for &id in change_ids {
        let entry = result
            .change_log
            .iter()
            .find(|e| e.id == id)
            .ok_or(RevertError::UnknownChangeId(id))?;
        if !entry.kind.is_reversible() {
            return Err(RevertError::IrreversibleChange {
                id,
                kind: entry.kind,
            });
        }
        targets.push(entry.clone());
    }
    if targets.is_empty() {
        return Ok(result.clone());
    }

    let mut out = result.clone();
    let mut removed: BTreeSet<u64> = change_ids.clone();
    // newest first so stacked changes on one point unwind in order
    targets.sort_by_key(|e| core::cmp::Reverse(e.id));
    for entry in &targets {
        let Some(time) = entry.time else { continue };
        let Some(idx) = out.index_of(time) else {
            continue;
        };
        match entry.kind {
            ChangeKind::OutlierReplaced => {
                let point = &mut out.clean_data[idx];
                point.value = entry.before.or(point.orig_value);
                point.method_used = None;
                out.outliers.retain(|o| o.time != time);
            }
            ChangeKind::ImputedMissing => {
                let point = &mut out.clean_data[idx];
                point.value = None;
                point.method_used = None;
                point.is_outlier = false;
                point.orig_value = None;
                out.outliers.retain(|o| o.time != time);
                for later in &out.change_log {
                    if later.kind == ChangeKind::OutlierReplaced && later.time == Some(time) {
                        removed.insert(later.id);
                    }
                }
            }
            _ => unreachable!("checked reversible above"),
        }
    }
    out.change_log.retain(|e| !removed.contains(&e.id));

    let values = out.values();
    let classes = classify_gaps(&values);
    for run in classes.runs() {
        for p in &mut out.clean_data[run.start..run.start + run.len] {
            p.missing_type = Some(run.mechanism);
        }
    }
    Ok(out)
}
