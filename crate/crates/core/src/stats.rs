//! Small descriptive statistics.

use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::math;

/// Quantile of already sorted data by linear interpolation between order
/// statistics (`h = (n - 1) p`).
pub fn quantile_sorted(sorted: &[f64], p: f64) -> f64 {
    debug_assert!(!sorted.is_empty());
    let h = (sorted.len() - 1) as f64 * p;
    let lo = math::floor(h) as usize;
    let hi = math::ceil(h) as usize;
    let frac = h - lo as f64;
    if lo == hi {
        sorted[lo]
    } else {
        sorted[lo] + frac * (sorted[hi] - sorted[lo])
    }
}

pub fn sorted_copy(values: &[f64]) -> Vec<f64> {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    v
}

pub fn mean(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}

/// Sample variance (n - 1 denominator); 0 for fewer than two values.
pub fn variance(values: &[f64]) -> f64 {
    if values.len() < 2 {
        return 0.0;
    }
    let m = mean(values);
    values.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / (values.len() - 1) as f64
}

/// Six-number summary.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub min: f64,
    pub q1: f64,
    pub median: f64,
    pub mean: f64,
    pub q3: f64,
    pub max: f64,
}

/// Summary of the present values; `None` when there are none.
pub fn summary_stats<'a>(values: impl IntoIterator<Item = &'a Option<f64>>) -> Option<Summary> {
    let present: Vec<f64> = values.into_iter().filter_map(|v| *v).collect();
    summary_of(&present)
}

pub fn summary_of(values: &[f64]) -> Option<Summary> {
    if values.is_empty() {
        return None;
    }
    let sorted = sorted_copy(values);
    Some(Summary {
        min: sorted[0],
        q1: quantile_sorted(&sorted, 0.25),
        median: quantile_sorted(&sorted, 0.5),
        mean: mean(&sorted),
        q3: quantile_sorted(&sorted, 0.75),
        max: sorted[sorted.len() - 1],
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn five_values() {
        let s = summary_of(&[5.0, 1.0, 3.0, 2.0, 4.0]).unwrap();
        assert_eq!(
            s,
            Summary {
                min: 1.0,
                q1: 2.0,
                median: 3.0,
                mean: 3.0,
                q3: 4.0,
                max: 5.0
            }
        );
    }

    #[test]
    fn single_value() {
        let s = summary_of(&[7.5]).unwrap();
        assert!([s.min, s.q1, s.median, s.mean, s.q3, s.max]
            .iter()
            .all(|&v| v == 7.5));
    }

    #[test]
    fn skips_absent() {
        let s = summary_stats(&[None, Some(2.0), None, Some(4.0)]).unwrap();
        assert_eq!(s.median, 3.0);
        assert_eq!(s.q1, 2.5);
        assert!(summary_stats(&[None, None]).is_none());
    }

    #[test]
    fn quantiles_interpolate() {
        let v = [1.0, 2.0, 3.0, 4.0];
        assert_eq!(quantile_sorted(&v, 0.25), 1.75);
        assert_eq!(quantile_sorted(&v, 0.75), 3.25);
        assert_eq!(variance(&v), 5.0 / 3.0);
    }
}
