//! Seasonal-trend decomposition and IQR outlier detection.
//!
//! The series is split additively into seasonal, trend and remainder
//! parts with loess smoothers. Remainder values outside
//! `[Q1 - m·IQR, Q3 + m·IQR]`, `m = 0.15 / alpha`, are outliers. Flagged
//! values can then be hidden and refilled through the benchmark.

pub mod loess;

use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::benchmark::{benchmark_and_fill, BenchmarkConfig, BenchmarkError, Filled};
use crate::impute::MethodRegistry;
use crate::math;
use crate::series::{ErrorRow, Mechanism, MethodId};
use crate::stats::{quantile_sorted, sorted_copy};

use self::loess::{loess, next_odd};

/// Shortest series `infer_period` accepts.
pub const MIN_PERIOD_SERIES_LEN: usize = 8;
/// Autocorrelation a candidate period needs to count as seasonal.
pub const MIN_SEASONAL_ACF: f64 = 0.1;
/// Remainders below this fraction of the series' largest deviation from
/// its median count as zero.
pub const REMAINDER_NOISE_FLOOR: f64 = 1e-9;
/// Largest lag scanned when the interval suggests no candidates.
pub const MAX_SCANNED_LAG: usize = 1000;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum AnomalyError {
    #[error("series has {found} points, need at least {needed}")]
    SeriesTooShort { needed: usize, found: usize },
    #[error("period must be positive")]
    ZeroPeriod,
    #[error("alpha must lie in (0, 1)")]
    BadAlpha,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnomalyConfig {
    pub alpha: f64,
    /// Seasonal period in samples; inferred when absent.
    pub period: Option<usize>,
    /// Replace flagged values through the benchmark, or only flag them.
    pub replace: bool,
    /// Run detection at all.
    pub detect: bool,
    /// Robustness passes of the decomposition (0 means plain least squares).
    pub robust_iterations: usize,
}

impl Default for AnomalyConfig {
    fn default() -> Self {
        AnomalyConfig {
            alpha: 0.05,
            period: None,
            replace: true,
            detect: true,
            robust_iterations: DEFAULT_ROBUST_ITERATIONS,
        }
    }
}

/// Robustness passes used unless configured otherwise.
pub const DEFAULT_ROBUST_ITERATIONS: usize = 1;

impl AnomalyConfig {
    pub fn validate(&self) -> Result<(), AnomalyError> {
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(AnomalyError::BadAlpha);
        }
        if self.period == Some(0) {
            return Err(AnomalyError::ZeroPeriod);
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Decomposition {
    pub seasonal: Vec<f64>,
    pub trend: Vec<f64>,
    pub remainder: Vec<f64>,
    pub period: usize,
}

fn autocorrelation(values: &[f64], lag: usize) -> f64 {
    let n = values.len();
    if lag >= n {
        return 0.0;
    }
    let m = values.iter().sum::<f64>() / n as f64;
    let denom: f64 = values.iter().map(|v| (v - m) * (v - m)).sum();
    if denom <= 0.0 {
        return 0.0;
    }
    let num: f64 = values[..n - lag]
        .iter()
        .zip(&values[lag..])
        .map(|(a, b)| (a - m) * (b - m))
        .sum();
    num / denom
}

fn interval_candidates(interval: i64) -> &'static [usize] {
    match interval {
        3600 => &[24, 168],
        86400 => &[7, 365],
        _ => &[],
    }
}

/// Picks a seasonal period in samples, or 1 when the series shows no
/// seasonality.
///
/// Hourly data tries 24 and 168, daily data 7 and 365; other intervals
/// use the autocorrelation peaks. The best candidate up to `n / 2` wins if
/// its autocorrelation reaches 0.1, otherwise the first local
/// autocorrelation maximum at lag 2 or more is tried. Peaks found by
/// scanning must also clear `4 / sqrt(n)`, the level white noise of that
/// length rarely reaches.
pub fn infer_period(values: &[f64], interval: i64) -> Result<usize, AnomalyError> {
    let n = values.len();
    if n < MIN_PERIOD_SERIES_LEN {
        return Err(AnomalyError::SeriesTooShort {
            needed: MIN_PERIOD_SERIES_LEN,
            found: n,
        });
    }
    let max_lag = (n / 2).min(MAX_SCANNED_LAG);
    let acf: Vec<f64> = (0..=max_lag + 1).map(|k| autocorrelation(values, k)).collect();
    let peaks: Vec<usize> = (2..=max_lag)
        .filter(|&k| acf[k] > acf[k - 1] && acf[k] >= acf[k + 1])
        .collect();

    let fixed: Vec<usize> = interval_candidates(interval)
        .iter()
        .copied()
        .filter(|&p| p <= n / 2)
        .collect();
    let scanned = interval_candidates(interval).is_empty();
    let candidates = if scanned { peaks.clone() } else { fixed };
    let scan_threshold = MIN_SEASONAL_ACF.max(4.0 / math::sqrt(n as f64));
    let mut best: Option<(usize, f64)> = None;
    for p in candidates {
        let r = if p <= max_lag + 1 {
            acf[p]
        } else {
            autocorrelation(values, p)
        };
        if best.is_none_or(|(_, b)| r > b) {
            best = Some((p, r));
        }
    }
    if let Some((p, r)) = best {
        let threshold = if scanned { scan_threshold } else { MIN_SEASONAL_ACF };
        if r >= threshold {
            return Ok(p);
        }
    }
    Ok(peaks
        .first()
        .copied()
        .filter(|&k| acf[k] >= scan_threshold)
        .unwrap_or(1))
}

/// Trend span for a given period and length.
pub fn trend_span(period: usize, n: usize) -> usize {
    if period <= 1 {
        next_odd(n as f64 / 10.0).clamp(7, 1001)
    } else {
        next_odd(1.5 * period as f64).max(7)
    }
}

fn bisquare_weights(remainder: &[f64]) -> Vec<f64> {
    let abs: Vec<f64> = remainder.iter().map(|r| math::abs(*r)).collect();
    let sorted = sorted_copy(&abs);
    let h = 6.0 * quantile_sorted(&sorted, 0.5);
    abs.iter()
        .map(|a| {
            if h <= 0.0 {
                if *a <= 0.0 {
                    1.0
                } else {
                    0.0
                }
            } else {
                let u = a / h;
                if u >= 1.0 {
                    0.0
                } else {
                    let t = 1.0 - u * u;
                    t * t
                }
            }
        })
        .collect()
}

fn periodic_seasonal(detrended: &[f64], period: usize, weights: Option<&[f64]>) -> Vec<f64> {
    let mut cycle = vec![0.0; period];
    for (phase, c) in cycle.iter_mut().enumerate() {
        let (mut sw, mut swy) = (0.0, 0.0);
        for i in (phase..detrended.len()).step_by(period) {
            let w = weights.map_or(1.0, |w| w[i]);
            sw += w;
            swy += w * detrended[i];
        }
        if sw <= 0.0 {
            // every point of this phase was down-weighted; fall back to the plain mean
            for i in (phase..detrended.len()).step_by(period) {
                sw += 1.0;
                swy += detrended[i];
            }
        }
        *c = swy / sw;
    }
    let centre = cycle.iter().sum::<f64>() / period as f64;
    for c in &mut cycle {
        *c -= centre;
    }
    (0..detrended.len()).map(|i| cycle[i % period]).collect()
}

/// Remainder with `(s + t) + r == y` exactly.
///
/// Such an `r` exists whenever `s + t` and `y` share a sign and lie within
/// a factor of two of each other, and in most other cases. When `r` has to
/// be coarser than `y`'s precision (a fit far larger in magnitude than the
/// value) no `r` can satisfy the identity, and the closest one is returned.
fn exact_residual(y: f64, fitted: f64) -> f64 {
    let mut r = y - fitted;
    for _ in 0..8 {
        let back = fitted + r;
        if back == y {
            return r;
        }
        r += y - back;
    }
    for _ in 0..64 {
        let back = fitted + r;
        if back == y {
            return r;
        }
        r = if back < y { r.next_up() } else { r.next_down() };
    }
    r
}

/// Additive decomposition with `robust_iterations` outer robustness
/// passes. Each pass runs two inner rounds of seasonal and trend
/// smoothing.
pub fn decompose_with(
    values: &[f64],
    period: usize,
    robust_iterations: usize,
) -> Result<Decomposition, AnomalyError> {
    if period == 0 {
        return Err(AnomalyError::ZeroPeriod);
    }
    let n = values.len();
    let needed = if period > 1 { 2 * period } else { 1 };
    if n < needed {
        return Err(AnomalyError::SeriesTooShort { needed, found: n });
    }
    let span = trend_span(period, n);
    let mut seasonal = vec![0.0; n];
    let mut trend = vec![0.0; n];
    let mut weights: Option<Vec<f64>> = None;

    for pass in 0..=robust_iterations {
        if pass > 0 {
            let rem: Vec<f64> = (0..n).map(|i| values[i] - seasonal[i] - trend[i]).collect();
            weights = Some(bisquare_weights(&rem));
        }
        let w = weights.as_deref();
        if period == 1 {
            trend = loess(values, span, w);
            continue;
        }
        for _ in 0..2 {
            let detrended: Vec<f64> = values.iter().zip(&trend).map(|(y, t)| y - t).collect();
            seasonal = periodic_seasonal(&detrended, period, w);
            let adjusted: Vec<f64> = values.iter().zip(&seasonal).map(|(y, s)| y - s).collect();
            trend = loess(&adjusted, span, w);
        }
    }

    let remainder = (0..n)
        .map(|i| exact_residual(values[i], seasonal[i] + trend[i]))
        .collect();
    Ok(Decomposition {
        seasonal,
        trend,
        remainder,
        period,
    })
}

/// Additive decomposition with the default number of robustness passes.
pub fn decompose(values: &[f64], period: usize) -> Result<Decomposition, AnomalyError> {
    decompose_with(values, period, DEFAULT_ROBUST_ITERATIONS)
}

/// IQR fences with multiplier `0.15 / alpha`. A zero IQR collapses both
/// fences onto the median.
pub fn iqr_bounds(remainder: &[f64], alpha: f64) -> (f64, f64) {
    let sorted = sorted_copy(remainder);
    let q1 = quantile_sorted(&sorted, 0.25);
    let q3 = quantile_sorted(&sorted, 0.75);
    let iqr = q3 - q1;
    if iqr == 0.0 {
        let median = quantile_sorted(&sorted, 0.5);
        return (median, median);
    }
    let m = 0.15 / alpha;
    (q1 - m * iqr, q3 + m * iqr)
}

/// Period actually used for a series of length `n`.
pub fn effective_period(values: &[f64], cfg: &AnomalyConfig, interval: i64) -> usize {
    let n = values.len();
    let p = match cfg.period {
        Some(p) => p,
        None => infer_period(values, interval).unwrap_or(1),
    };
    if p > 1 && n < 2 * p {
        1
    } else {
        p
    }
}

/// Ascending indices whose remainder falls outside the IQR fences.
///
/// The series is centred on its median before decomposing, so adding a
/// constant that keeps the arithmetic exact leaves the result unchanged.
/// Remainders within rounding noise of zero are treated as zero.
pub fn detect_outliers(
    values: &[f64],
    cfg: &AnomalyConfig,
    interval: i64,
) -> Result<Vec<usize>, AnomalyError> {
    cfg.validate()?;
    if values.is_empty() {
        return Ok(Vec::new());
    }
    let sorted = sorted_copy(values);
    let centre = sorted[(sorted.len() - 1) / 2];
    let centred: Vec<f64> = values.iter().map(|v| v - centre).collect();
    let period = effective_period(&centred, cfg, interval);
    let d = decompose_with(&centred, period, cfg.robust_iterations)?;
    let floor = REMAINDER_NOISE_FLOOR * centred.iter().fold(0.0, |m, v| math::abs(*v).max(m));
    let remainder: Vec<f64> = d
        .remainder
        .iter()
        .map(|r| if math::abs(*r) <= floor { 0.0 } else { *r })
        .collect();
    let (lo, hi) = iqr_bounds(&remainder, cfg.alpha);
    Ok(remainder
        .iter()
        .enumerate()
        .filter(|(_, r)| **r < lo || **r > hi)
        .map(|(i, _)| i)
        .collect())
}

/// One replaced outlier.
#[derive(Debug, Clone, PartialEq)]
pub struct Replacement {
    pub index: usize,
    pub value: f64,
    pub orig_value: f64,
    pub mechanism: Mechanism,
    pub method_used: MethodId,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Replaced {
    pub values: Vec<f64>,
    pub replacements: Vec<Replacement>,
    pub mcar_err: Option<ErrorRow>,
    pub mar_err: Option<ErrorRow>,
    pub skipped: Option<BenchmarkError>,
}

/// Hides the flagged values and refills them through the benchmark:
/// isolated outliers are routed as MCAR gaps, runs as MAR gaps.
pub fn replace_outliers(
    values: &[f64],
    indices: &[usize],
    cfg: &BenchmarkConfig,
    registry: &MethodRegistry,
) -> Result<Replaced, BenchmarkError> {
    if indices.is_empty() {
        return Ok(Replaced {
            values: values.to_vec(),
            replacements: Vec::new(),
            mcar_err: None,
            mar_err: None,
            skipped: None,
        });
    }
    let mut masked: Vec<Option<f64>> = values.iter().copied().map(Some).collect();
    for &i in indices {
        masked[i] = None;
    }
    let Filled {
        imputed,
        mcar_err,
        mar_err,
        skipped,
        ..
    } = benchmark_and_fill(&masked, cfg, registry)?;
    let mut replacements = Vec::with_capacity(indices.len());
    let mut out = values.to_vec();
    for (i, annotation) in imputed.annotations.into_iter().enumerate() {
        if let Some((mechanism, method_used)) = annotation {
            out[i] = imputed.values[i];
            replacements.push(Replacement {
                index: i,
                value: imputed.values[i],
                orig_value: values[i],
                mechanism,
                method_used,
            });
        }
    }
    Ok(Replaced {
        values: out,
        replacements,
        mcar_err,
        mar_err,
        skipped,
    })
}

#[cfg(test)]
mod tests;
