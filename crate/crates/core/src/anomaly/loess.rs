//! Degree-1 loess on an evenly spaced index axis.

use alloc::vec::Vec;

/// Smallest odd integer `>= x`.
pub fn next_odd(x: f64) -> usize {
    let n = crate::math::ceil(x).max(1.0) as usize;
    if n.is_multiple_of(2) {
        n + 1
    } else {
        n
    }
}

fn tricube(u: f64) -> f64 {
    if u >= 1.0 {
        0.0
    } else {
        let t = 1.0 - u * u * u;
        t * t * t
    }
}

fn local_fit(
    y: &[f64],
    i: usize,
    left: usize,
    right: usize,
    h: f64,
    robustness: Option<&[f64]>,
) -> Option<f64> {
    let (mut sw, mut swx, mut swxx, mut swy, mut swxy) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for j in left..=right {
        let dx = j as f64 - i as f64;
        let mut w = tricube(crate::math::abs(dx) / h);
        if let Some(r) = robustness {
            w *= r[j];
        }
        if w == 0.0 {
            continue;
        }
        sw += w;
        swx += w * dx;
        swxx += w * dx * dx;
        swy += w * y[j];
        swxy += w * dx * y[j];
    }
    if sw <= 0.0 {
        return None;
    }
    let xbar = swx / sw;
    let ybar = swy / sw;
    let sxx = swxx - sw * xbar * xbar;
    let sxy = swxy - sw * xbar * ybar;
    // evaluate the local line at dx = 0
    Some(if sxx > 1e-9 * sw {
        ybar - (sxy / sxx) * xbar
    } else {
        ybar
    })
}

/// Local linear fit at every index using the `span` nearest points and
/// tricube distance weights, optionally multiplied by `robustness`.
///
/// When `span` exceeds the series the bandwidth widens by the excess, so
/// that very large spans approach a global weighted linear fit.
pub fn loess(y: &[f64], span: usize, robustness: Option<&[f64]>) -> Vec<f64> {
    let n = y.len();
    if n == 0 {
        return Vec::new();
    }
    if n == 1 {
        return y.to_vec();
    }
    let q = span.max(2);
    let window = q.min(n);
    let half = window / 2;
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let left = i.saturating_sub(half).min(n - window);
        let right = left + window - 1;
        let mut h = (i - left).max(right - i) as f64;
        if q > n {
            h += ((q - n) / 2) as f64;
        }
        // keep the window edges from getting exactly zero weight
        let mut h = h.max(1.0) * 1.0001;
        let (mut left, mut right) = (left, right);
        loop {
            if let Some(fit) = local_fit(y, i, left, right, h, robustness) {
                out.push(fit);
                break;
            }
            if left == 0 && right == n - 1 {
                out.push(y[i]);
                break;
            }
            // every neighbour was down-weighted to zero: widen the window
            h *= 2.0;
            let reach = crate::math::floor(h) as usize;
            left = i.saturating_sub(reach);
            right = (i + reach).min(n - 1);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn odd_spans() {
        assert_eq!(next_odd(36.0), 37);
        assert_eq!(next_odd(36.5), 37);
        assert_eq!(next_odd(7.0), 7);
        assert_eq!(next_odd(0.0), 1);
    }

    #[test]
    fn reproduces_lines() {
        let y: Vec<f64> = (0..50).map(|i| 3.0 - 0.25 * i as f64).collect();
        for span in [3, 7, 37, 49, 200] {
            let s = loess(&y, span, None);
            for (a, b) in s.iter().zip(&y) {
                assert!((a - b).abs() < 1e-9, "span {span}: {a} vs {b}");
            }
        }
    }

    #[test]
    fn smooths_noise() {
        let y: Vec<f64> = (0..200).map(|i| if i % 2 == 0 { 1.0 } else { -1.0 }).collect();
        let s = loess(&y, 21, None);
        assert!(s[20..180].iter().all(|v| v.abs() < 0.1));
    }

    #[test]
    fn zero_robustness_weight_ignores_point() {
        let mut y = vec![0.0; 30];
        y[15] = 100.0;
        let mut rw = vec![1.0; 30];
        rw[15] = 0.0;
        let s = loess(&y, 9, Some(&rw));
        assert!(s.iter().all(|v| v.abs() < 1e-12));
    }
}
