//! The end-to-end cleaner.
//!
//! Stages run in a fixed order: column selection, timestamp parsing, value
//! coercion, timeline repair, gap imputation, then outlier detection and
//! replacement. Every mutation is written to the change log.

use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::anomaly::{detect_outliers, replace_outliers, AnomalyConfig, AnomalyError};
use crate::benchmark::{benchmark_and_fill, BenchmarkConfig, BenchmarkError};
use crate::impute::MethodRegistry;
use crate::series::{
    AnnotatedPoint, ChangeEntry, ChangeKind, CleanResult, OutlierRecord, RawSeries, RawTable,
};
use crate::table::{coerce_values, select_columns, SelectError};
use crate::time::{parse_column, parse_format_order, ColumnError, FormatError, FormatOrder, Instant};
use crate::timeline::{regularize, TimelineError};

pub use crate::stats::{summary_stats, Summary};

/// Everything `clean` can be told. Defaults mirror the reference
/// signature: the four built-in methods and outlier replacement on.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CleanConfig {
    /// One or more format orders separated by commas, e.g. `ymdHMS` or
    /// `dmyHMS,ymdHMS`.
    pub date_format: String,
    pub time: Option<String>,
    pub value: Option<String>,
    pub benchmark: BenchmarkConfig,
    pub anomaly: AnomalyConfig,
}

impl CleanConfig {
    pub fn new(date_format: impl Into<String>) -> Self {
        CleanConfig {
            date_format: date_format.into(),
            time: None,
            value: None,
            benchmark: BenchmarkConfig::default(),
            anomaly: AnomalyConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum CleanError {
    #[error("format: {0}")]
    Format(#[from] FormatError),
    #[error("select: {0}")]
    Select(#[from] SelectError),
    #[error("parse: {0}")]
    Parse(#[from] ColumnError),
    #[error("timeline: {0}")]
    Timeline(#[from] TimelineError),
    #[error("impute: {0}")]
    Impute(BenchmarkError),
    #[error("outliers: {0}")]
    Outliers(AnomalyError),
    #[error("outliers: {0}")]
    OutlierReplacement(BenchmarkError),
}

impl CleanError {
    /// Name of the stage that failed.
    pub fn stage(&self) -> &'static str {
        match self {
            CleanError::Format(_) => "format",
            CleanError::Select(_) => "select",
            CleanError::Parse(_) => "parse",
            CleanError::Timeline(_) => "timeline",
            CleanError::Impute(_) => "impute",
            CleanError::Outliers(_) | CleanError::OutlierReplacement(_) => "outliers",
        }
    }
}

/// Parses a comma-separated list of format orders.
pub fn parse_date_format(spec: &str) -> Result<Vec<FormatOrder>, FormatError> {
    spec.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(parse_format_order)
        .collect()
}

struct ChangeLog(Vec<ChangeEntry>);

impl ChangeLog {
    fn push(&mut self, kind: ChangeKind, time: Option<Instant>, before: Option<f64>, after: Option<f64>) {
        let id = self.0.len() as u64;
        self.0.push(ChangeEntry {
            id,
            kind,
            time,
            before,
            after,
        });
    }
}

/// Cleans one univariate series held in `table`.
pub fn clean(
    table: &RawTable,
    cfg: &CleanConfig,
    registry: &MethodRegistry,
) -> Result<CleanResult, CleanError> {
    let orders = parse_date_format(&cfg.date_format)?;
    cfg.benchmark.validate().map_err(CleanError::Impute)?;
    cfg.anomaly.validate().map_err(CleanError::Outliers)?;
    let mut log = ChangeLog(Vec::new());

    let columns = select_columns(table, cfg.time.as_deref(), cfg.value.as_deref())?;
    let parsed = parse_column(&columns.time, &orders)?;
    let coerced = coerce_values(&columns.value);
    for &i in &parsed.failure_indices {
        log.push(ChangeKind::TimestampParseFailed, None, coerced.values[i], None);
    }
    for &i in &coerced.failed_indices {
        if let Some(t) = parsed.instants[i] {
            log.push(ChangeKind::ValueCoercionFailed, Some(t), None, None);
        }
    }
    let raw = RawSeries {
        points: parsed
            .instants
            .iter()
            .zip(&coerced.values)
            .filter_map(|(t, v)| t.map(|t| (t, *v)))
            .collect(),
    };

    let repaired = regularize(&raw)?;
    for &t in &repaired.missing_ts {
        log.push(ChangeKind::InsertedTimestamp, Some(t), None, None);
    }
    for &t in &repaired.duplicate_ts {
        if repaired.conflicts.binary_search(&t).is_ok() {
            log.push(ChangeKind::ConflictingDuplicateNulled, Some(t), None, None);
        } else {
            let idx = ((t.0 - repaired.series.start().0) / repaired.series.interval()) as usize;
            let v = repaired.series.values()[idx];
            log.push(ChangeKind::Deduplicated, Some(t), v, v);
        }
    }
    let series = &repaired.series;

    let filled = benchmark_and_fill(series.values(), &cfg.benchmark, registry)
        .map_err(CleanError::Impute)?;
    if filled.skipped.is_some() {
        log.push(ChangeKind::BenchmarkSkipped, None, None, None);
    }
    let mut clean_data: Vec<AnnotatedPoint> = Vec::with_capacity(series.len());
    for (i, value) in filled.imputed.values.iter().enumerate() {
        let time = series.time_at(i);
        let mut point = AnnotatedPoint::observed(time, *value);
        if let Some((mechanism, method)) = &filled.imputed.annotations[i] {
            point.missing_type = Some(*mechanism);
            point.method_used = Some(method.clone());
            log.push(ChangeKind::ImputedMissing, Some(time), None, Some(*value));
        }
        clean_data.push(point);
    }

    let mut outliers = Vec::new();
    let (mut outlier_mcar_err, mut outlier_mar_err) = (None, None);
    if cfg.anomaly.detect {
        let values = &filled.imputed.values;
        let flagged =
            detect_outliers(values, &cfg.anomaly, series.interval()).map_err(CleanError::Outliers)?;
        if cfg.anomaly.replace {
            let replaced = replace_outliers(values, &flagged, &cfg.benchmark, registry)
                .map_err(CleanError::OutlierReplacement)?;
            if replaced.skipped.is_some() {
                log.push(ChangeKind::BenchmarkSkipped, None, None, None);
            }
            outlier_mcar_err = replaced.mcar_err;
            outlier_mar_err = replaced.mar_err;
            for r in replaced.replacements {
                let point = &mut clean_data[r.index];
                point.value = Some(r.value);
                point.is_outlier = true;
                point.orig_value = Some(r.orig_value);
                point.method_used = Some(r.method_used.clone());
                log.push(ChangeKind::OutlierReplaced, Some(point.time), Some(r.orig_value), Some(r.value));
                outliers.push(OutlierRecord {
                    time: point.time,
                    value: r.value,
                    orig_value: r.orig_value,
                    method_used: Some(r.method_used),
                });
            }
        } else {
            for i in flagged {
                let point = &mut clean_data[i];
                let v = values[i];
                point.is_outlier = true;
                point.orig_value = Some(v);
                outliers.push(OutlierRecord {
                    time: point.time,
                    value: v,
                    orig_value: v,
                    method_used: None,
                });
            }
        }
    }

    Ok(CleanResult {
        clean_data,
        missing_ts: repaired.missing_ts,
        duplicate_ts: repaired.duplicate_ts,
        imp_methods: cfg.benchmark.methods.clone(),
        mcar_err: filled.mcar_err,
        mar_err: filled.mar_err,
        outliers,
        outlier_mcar_err,
        outlier_mar_err,
        change_log: log.0,
    })
}
