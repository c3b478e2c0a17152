//! Local linear trend model fitted by maximum likelihood, with fixed
//! interval smoothing for gap filling.
//!
//! State `(level, slope)` evolves as
//!
//! ```text
//! level' = level + slope + level_noise     (variance level_var)
//! slope' = slope + slope_noise             (variance slope_var)
//! y      = level + obs_noise               (variance obs_var)
//! ```
//!
//! Steps with a missing observation skip the measurement update. The
//! variances are found by Nelder–Mead over their logarithms.

use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::ImputeError;
use crate::math;
use crate::optim::{nelder_mead, NelderMeadOptions};
use crate::stats::variance;

/// Smallest variance the filter will use.
pub const VARIANCE_FLOOR: f64 = 1e-12;
/// Diagonal of the initial state covariance.
pub const DIFFUSE_PRIOR: f64 = 1e7;
/// Observed steps whose innovations are left out of the likelihood while
/// the diffuse prior settles (one per state).
pub const BURN_IN: usize = 2;

const LN_2PI: f64 = 1.837_877_066_409_345_5;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KalmanModel {
    pub level_var: f64,
    pub slope_var: f64,
    pub obs_var: f64,
    pub loglik: f64,
}

/// Log-variance box searched by the optimizer, per parameter.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SearchBox {
    pub lower: f64,
    pub upper: f64,
    /// Starting point, inside the box.
    pub start: f64,
}

fn observed_diffs(values: &[Option<f64>]) -> Vec<f64> {
    values
        .windows(2)
        .filter_map(|w| match (w[0], w[1]) {
            (Some(a), Some(b)) => Some(b - a),
            _ => None,
        })
        .collect()
}

/// The log-variance box for `values`: it starts at the log of the sample
/// variance of first differences and spans 20 e-folds below to 5 above
/// that scale, never below the variance floor.
pub fn search_box(values: &[Option<f64>]) -> SearchBox {
    let observed: Vec<f64> = values.iter().flatten().copied().collect();
    let diff_var = variance(&observed_diffs(values));
    let scale = diff_var
        .max(1e-6 * variance(&observed))
        .max(VARIANCE_FLOOR);
    let center = math::ln(scale);
    let lower = (center - 20.0).max(math::ln(VARIANCE_FLOOR));
    let upper = center + 5.0;
    let start = math::ln(diff_var.max(VARIANCE_FLOOR)).clamp(lower, upper);
    SearchBox {
        lower,
        upper,
        start,
    }
}

/// Gaussian log-likelihood of `values` under the given variances, by
/// prediction error decomposition. The first [`BURN_IN`] observed steps
/// are excluded.
pub fn log_likelihood(values: &[Option<f64>], level_var: f64, slope_var: f64, obs_var: f64) -> f64 {
    let q_level = level_var.max(VARIANCE_FLOOR);
    let q_slope = slope_var.max(VARIANCE_FLOOR);
    let h = obs_var.max(VARIANCE_FLOOR);
    let Some(first) = values.iter().find_map(|v| *v) else {
        return f64::NAN;
    };

    let (mut level, mut slope) = (first, 0.0);
    let (mut p11, mut p12, mut p22) = (DIFFUSE_PRIOR, 0.0, DIFFUSE_PRIOR);
    let mut seen = 0usize;
    let mut ll = 0.0;
    for v in values {
        if let Some(y) = v {
            let innov = y - level;
            let f = p11 + h;
            if seen >= BURN_IN {
                ll -= 0.5 * (LN_2PI + math::ln(f) + innov * innov / f);
            }
            seen += 1;
            let k1 = p11 / f;
            let k2 = p12 / f;
            level += k1 * innov;
            slope += k2 * innov;
            let new_p22 = p22 - p12 * k2;
            p11 *= h / f;
            p12 *= h / f;
            p22 = new_p22.max(0.0);
        }
        level += slope;
        p11 += 2.0 * p12 + p22 + q_level;
        p12 += p22;
        p22 += q_slope;
    }
    ll
}

/// Fits the three variances by maximum likelihood.
///
/// With all observations identical the likelihood is degenerate; the fit
/// then returns floor variances without searching.
pub fn fit_kalman(values: &[Option<f64>]) -> Result<KalmanModel, ImputeError> {
    let observed: Vec<f64> = values.iter().flatten().copied().collect();
    if observed.len() < 3 {
        return Err(ImputeError::TooFewObserved {
            needed: 3,
            found: observed.len(),
        });
    }
    if observed.iter().all(|v| v.to_bits() == observed[0].to_bits()) {
        let loglik = log_likelihood(values, VARIANCE_FLOOR, VARIANCE_FLOOR, VARIANCE_FLOOR);
        return Ok(KalmanModel {
            level_var: VARIANCE_FLOOR,
            slope_var: VARIANCE_FLOOR,
            obs_var: VARIANCE_FLOOR,
            loglik,
        });
    }

    let bx = search_box(values);
    let objective = |x: &[f64]| {
        -log_likelihood(values, math::exp(x[0]), math::exp(x[1]), math::exp(x[2]))
    };
    let min = nelder_mead(
        objective,
        &[bx.start; 3],
        &[bx.lower; 3],
        &[bx.upper; 3],
        &NelderMeadOptions::default(),
    );
    if !min.value.is_finite() {
        return Err(ImputeError::NonFiniteLikelihood);
    }
    Ok(KalmanModel {
        level_var: math::exp(min.x[0]).max(VARIANCE_FLOOR),
        slope_var: math::exp(min.x[1]).max(VARIANCE_FLOOR),
        obs_var: math::exp(min.x[2]).max(VARIANCE_FLOOR),
        loglik: -min.value,
    })
}

/// Smoothed `(level, slope)` at every index, conditioned on all
/// observations.
///
/// Forward pass stores the predicted state and covariance; the backward
/// pass runs the state smoothing recursion `r[t-1] = Z'v/F + L' r[t]`, so
/// no covariance is ever inverted.
pub fn smooth(values: &[Option<f64>], model: &KalmanModel) -> Vec<(f64, f64)> {
    let n = values.len();
    let Some(first) = values.iter().find_map(|v| *v) else {
        return alloc::vec![(0.0, 0.0); n];
    };
    let q_level = model.level_var.max(VARIANCE_FLOOR);
    let q_slope = model.slope_var.max(VARIANCE_FLOOR);
    let h = model.obs_var.max(VARIANCE_FLOOR);

    struct Step {
        a: (f64, f64),
        p: (f64, f64, f64),
        // innovation over its variance, and the predicted-state gain
        v_over_f: f64,
        k: (f64, f64),
        observed: bool,
    }
    let mut steps = Vec::with_capacity(n);
    let (mut level, mut slope) = (first, 0.0);
    let (mut p11, mut p12, mut p22) = (DIFFUSE_PRIOR, 0.0, DIFFUSE_PRIOR);
    for v in values {
        let mut step = Step {
            a: (level, slope),
            p: (p11, p12, p22),
            v_over_f: 0.0,
            k: (0.0, 0.0),
            observed: false,
        };
        if let Some(y) = v {
            let innov = y - level;
            let f = p11 + h;
            let k1 = p11 / f;
            let k2 = p12 / f;
            step.v_over_f = innov / f;
            // gain for the next predicted state: T P Z' / F
            step.k = (k1 + k2, k2);
            step.observed = true;
            level += k1 * innov;
            slope += k2 * innov;
            let new_p22 = p22 - p12 * k2;
            p11 *= h / f;
            p12 *= h / f;
            p22 = new_p22.max(0.0);
        }
        steps.push(step);
        level += slope;
        p11 += 2.0 * p12 + p22 + q_level;
        p12 += p22;
        p22 += q_slope;
    }

    let mut out = alloc::vec![(0.0, 0.0); n];
    let (mut r1, mut r2) = (0.0, 0.0);
    for (t, step) in steps.iter().enumerate().rev() {
        if step.observed {
            let (k1, k2) = step.k;
            let nr1 = step.v_over_f + (1.0 - k1) * r1 - k2 * r2;
            let nr2 = r1 + r2;
            r1 = nr1;
            r2 = nr2;
        } else {
            r2 += r1;
        }
        let (a1, a2) = step.a;
        let (q11, q12, q22) = step.p;
        out[t] = (a1 + q11 * r1 + q12 * r2, a2 + q12 * r1 + q22 * r2);
    }
    out
}

/// Fills each gap with the smoothed level of the fitted model.
pub fn impute_kalman(values: &[Option<f64>]) -> Result<Vec<f64>, ImputeError> {
    let model = fit_kalman(values)?;
    let observed: Vec<f64> = values.iter().flatten().copied().collect();
    if observed.iter().all(|v| v.to_bits() == observed[0].to_bits()) {
        return Ok(alloc::vec![observed[0]; values.len()]);
    }
    let states = smooth(values, &model);
    Ok(values
        .iter()
        .zip(states)
        .map(|(v, (level, _))| v.unwrap_or(level))
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    /// Textbook Kalman filter with explicit 2x2 matrices, used as an
    /// oracle for the scalar recursion.
    fn oracle_loglik(values: &[Option<f64>], q: [f64; 3]) -> f64 {
        type M = [[f64; 2]; 2];
        let mul = |a: M, b: M| -> M {
            let mut c = [[0.0; 2]; 2];
            for i in 0..2 {
                for j in 0..2 {
                    c[i][j] = a[i][0] * b[0][j] + a[i][1] * b[1][j];
                }
            }
            c
        };
        let tr = |a: M| -> M { [[a[0][0], a[1][0]], [a[0][1], a[1][1]]] };
        let t: M = [[1.0, 1.0], [0.0, 1.0]];
        let first = values.iter().find_map(|v| *v).unwrap();
        let mut a = [first, 0.0];
        let mut p: M = [[DIFFUSE_PRIOR, 0.0], [0.0, DIFFUSE_PRIOR]];
        let mut ll = 0.0;
        let mut seen = 0;
        for v in values {
            if let Some(y) = v {
                let f = p[0][0] + q[2];
                let innov = y - a[0];
                if seen >= BURN_IN {
                    ll += -0.5 * ((2.0 * core::f64::consts::PI).ln() + f.ln() + innov * innov / f);
                }
                seen += 1;
                let k = [p[0][0] / f, p[1][0] / f];
                a = [a[0] + k[0] * innov, a[1] + k[1] * innov];
                // P - K F K'
                let kfk: M = [
                    [k[0] * k[0] * f, k[0] * k[1] * f],
                    [k[1] * k[0] * f, k[1] * k[1] * f],
                ];
                for i in 0..2 {
                    for j in 0..2 {
                        p[i][j] -= kfk[i][j];
                    }
                }
            }
            a = [a[0] + a[1], a[1]];
            p = mul(mul(t, p), tr(t));
            p[0][0] += q[0];
            p[1][1] += q[1];
        }
        ll
    }

    fn gapped_walk() -> Vec<Option<f64>> {
        // deterministic wiggly series with a few gaps
        (0..60)
            .map(|i| {
                let x = i as f64;
                let y = 0.3 * x + (x * 0.7).sin() * 2.0 + (x * 1.9).cos() * 0.5;
                if i % 11 == 5 {
                    None
                } else {
                    Some(y)
                }
            })
            .collect()
    }

    #[test]
    fn scalar_filter_matches_matrix_oracle() {
        let values = gapped_walk();
        for q in [[0.1, 0.01, 0.5], [2.0, 1e-6, 1e-3], [1e-9, 1e-9, 1.0]] {
            let a = log_likelihood(&values, q[0], q[1], q[2]);
            let b = oracle_loglik(&values, q);
            assert!((a - b).abs() < 1e-6 * b.abs().max(1.0), "{q:?}: {a} vs {b}");
        }
    }

    #[test]
    fn constant_series() {
        let values = vec![Some(5.0); 50];
        let m = fit_kalman(&values).unwrap();
        assert!(m.level_var <= 1e-9 && m.slope_var <= 1e-9 && m.obs_var <= 1e-9);
        for (level, _) in smooth(&values, &m) {
            assert!((level - 5.0).abs() < 1e-6);
        }
        let filled = impute_kalman(&[Some(5.0), None, Some(5.0), Some(5.0)]).unwrap();
        assert_eq!(filled, [5.0; 4]);
    }

    #[test]
    fn constant_with_gap() {
        let out = impute_kalman(&[Some(5.0), None, Some(5.0)]);
        // only two observations
        assert_eq!(
            out,
            Err(ImputeError::TooFewObserved {
                needed: 3,
                found: 2
            })
        );
        let out = impute_kalman(&[Some(5.0), None, Some(5.0), Some(5.0), None]).unwrap();
        for v in out {
            assert!((v - 5.0).abs() < 1e-6);
        }
    }

    #[test]
    fn linear_series_slope() {
        let values: Vec<Option<f64>> = (1..=50).map(|i| Some(i as f64)).collect();
        let m = fit_kalman(&values).unwrap();
        for (_, slope) in smooth(&values, &m) {
            assert!((slope - 1.0).abs() < 1e-3, "slope {slope}");
        }
    }

    #[test]
    fn fills_gap_in_line() {
        let mut values: Vec<Option<f64>> = (1..=10).map(|i| Some(i as f64)).collect();
        values[4] = None;
        let out = impute_kalman(&values).unwrap();
        assert!((out[4] - 5.0).abs() < 0.2, "{}", out[4]);
    }

    #[test]
    fn too_few_observed() {
        assert_eq!(
            fit_kalman(&[Some(1.0), None, Some(2.0)]),
            Err(ImputeError::TooFewObserved {
                needed: 3,
                found: 2
            })
        );
    }

    #[test]
    fn smoothing_tightens_as_obs_var_shrinks() {
        let values: Vec<Option<f64>> = gapped_walk().into_iter().flatten().map(Some).collect();
        let rmse = |obs_var: f64| {
            let m = KalmanModel {
                level_var: 0.5,
                slope_var: 0.01,
                obs_var,
                loglik: 0.0,
            };
            let s = smooth(&values, &m);
            let sse: f64 = values
                .iter()
                .zip(&s)
                .map(|(v, (l, _))| (v.unwrap() - l).powi(2))
                .sum();
            (sse / values.len() as f64).sqrt()
        };
        let (a, b, c) = (rmse(1.0), rmse(0.1), rmse(0.001));
        assert!(a >= b && b >= c, "{a} {b} {c}");
        assert!(c < 0.05);
    }
}
