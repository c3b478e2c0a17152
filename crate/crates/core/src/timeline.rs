//! Timeline repair: interval inference, missing timestamps and duplicates.

use alloc::collections::BTreeMap;
use alloc::vec::Vec;

use crate::series::{RawSeries, TimeSeries};
use crate::time::Instant;

/// Upper bound on the repaired grid length.
pub const MAX_GRID_POINTS: i64 = 50_000_000;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum TimelineError {
    #[error("need at least 2 distinct timestamps")]
    TooFewPoints,
    #[error("timestamps have no positive difference")]
    NoPositiveDifference,
    #[error("timestamp {0} is not on the {1}-second grid")]
    OffGridTimestamp(Instant, i64),
    #[error("repaired grid would hold {0} points")]
    GridTooLarge(i64),
}

/// Sampling interval in seconds: the most frequent difference between
/// consecutive distinct instants, preferring the smallest on ties.
pub fn infer_interval(instants: &[Instant]) -> Result<i64, TimelineError> {
    if instants.len() < 2 {
        return Err(TimelineError::TooFewPoints);
    }
    let mut sorted = instants.to_vec();
    sorted.sort_unstable();
    sorted.dedup();
    if sorted.len() < 2 {
        return Err(TimelineError::NoPositiveDifference);
    }
    let mut counts: BTreeMap<i64, usize> = BTreeMap::new();
    for w in sorted.windows(2) {
        *counts.entry(w[1].0 - w[0].0).or_default() += 1;
    }
    // BTreeMap iterates ascending, so a strict > keeps the smallest on ties
    let mut best = (0, 0usize);
    for (&diff, &count) in &counts {
        if count > best.1 {
            best = (diff, count);
        }
    }
    Ok(best.0)
}

/// Grid instants between the first and last input that are not present.
///
/// `instants` must be sorted and unique.
pub fn find_missing_timestamps(
    instants: &[Instant],
    interval: i64,
) -> Result<Vec<Instant>, TimelineError> {
    let mut missing = Vec::new();
    let Some(&first) = instants.first() else {
        return Ok(missing);
    };
    for w in instants.windows(2) {
        let gap = w[1].0 - w[0].0;
        if gap <= 0 || (w[1].0 - first.0) % interval != 0 {
            return Err(TimelineError::OffGridTimestamp(w[1], interval));
        }
        let mut t = w[0].0 + interval;
        while t < w[1].0 {
            missing.push(Instant(t));
            t += interval;
        }
    }
    Ok(missing)
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Deduplicated {
    /// One point per instant, ascending.
    pub points: Vec<(Instant, Option<f64>)>,
    /// Every instant that appeared more than once.
    pub duplicate_ts: Vec<Instant>,
    /// The subset of `duplicate_ts` whose copies disagreed; those points
    /// are nulled.
    pub conflicts: Vec<Instant>,
}

fn same_value(a: Option<f64>, b: Option<f64>) -> bool {
    match (a, b) {
        (Some(x), Some(y)) => x.to_bits() == y.to_bits(),
        (None, None) => true,
        _ => false,
    }
}

/// Collapses repeated instants. Bit-identical copies keep one value; any
/// disagreement leaves the instant with an absent value.
pub fn resolve_duplicates(points: &[(Instant, Option<f64>)]) -> Deduplicated {
    let mut sorted = points.to_vec();
    sorted.sort_by_key(|p| p.0);
    let mut out = Deduplicated {
        points: Vec::with_capacity(sorted.len()),
        ..Default::default()
    };
    let mut i = 0;
    while i < sorted.len() {
        let (t, v) = sorted[i];
        let mut j = i + 1;
        let mut agree = true;
        while j < sorted.len() && sorted[j].0 == t {
            agree &= same_value(v, sorted[j].1);
            j += 1;
        }
        if j - i > 1 {
            out.duplicate_ts.push(t);
            if !agree {
                out.conflicts.push(t);
            }
        }
        out.points.push((t, if agree { v } else { None }));
        i = j;
    }
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct Regularized {
    pub series: TimeSeries,
    pub missing_ts: Vec<Instant>,
    pub duplicate_ts: Vec<Instant>,
    pub conflicts: Vec<Instant>,
}

/// Sorts, deduplicates and gap-fills `raw` onto its inferred grid.
/// Inserted grid points carry absent values.
pub fn regularize(raw: &RawSeries) -> Result<Regularized, TimelineError> {
    regularize_with(raw, None)
}

/// Like [`regularize`] with an optional fixed interval.
pub fn regularize_with(raw: &RawSeries, interval: Option<i64>) -> Result<Regularized, TimelineError> {
    if raw.points.len() < 2 {
        return Err(TimelineError::TooFewPoints);
    }
    let dedup = resolve_duplicates(&raw.points);
    let instants: Vec<Instant> = dedup.points.iter().map(|p| p.0).collect();
    let interval = match interval {
        Some(i) if i > 0 => i,
        _ => infer_interval(&instants)?,
    };
    let start = instants[0];
    let end = instants[instants.len() - 1];
    let len = (end.0 - start.0) / interval + 1;
    if len > MAX_GRID_POINTS {
        return Err(TimelineError::GridTooLarge(len));
    }
    let missing_ts = find_missing_timestamps(&instants, interval)?;

    let mut values = alloc::vec![None; len as usize];
    for (t, v) in &dedup.points {
        values[((t.0 - start.0) / interval) as usize] = *v;
    }
    let series = TimeSeries::new(start, interval, values).map_err(|_| TimelineError::TooFewPoints)?;
    Ok(Regularized {
        series,
        missing_ts,
        duplicate_ts: dedup.duplicate_ts,
        conflicts: dedup.conflicts,
    })
}
