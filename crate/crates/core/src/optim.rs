//! Box-constrained Nelder–Mead simplex minimizer.

use alloc::vec;
use alloc::vec::Vec;

use crate::math;

#[derive(Debug, Clone, PartialEq)]
pub struct NelderMeadOptions {
    pub max_iterations: usize,
    /// Stop once the largest vertex distance from the best vertex (max
    /// norm) falls below this.
    pub diameter_tolerance: f64,
    pub initial_step: f64,
}

impl Default for NelderMeadOptions {
    fn default() -> Self {
        NelderMeadOptions {
            max_iterations: 500,
            diameter_tolerance: 1e-8,
            initial_step: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Minimum {
    pub x: Vec<f64>,
    pub value: f64,
    pub iterations: usize,
    pub converged: bool,
}

fn clamp_into(x: &mut [f64], lower: &[f64], upper: &[f64]) {
    for ((v, lo), hi) in x.iter_mut().zip(lower).zip(upper) {
        *v = v.clamp(*lo, *hi);
    }
}

/// Minimizes `f` starting from `start`; every trial point is projected
/// into `[lower, upper]`. Non-finite objective values count as `+inf`.
pub fn nelder_mead<F>(
    f: F,
    start: &[f64],
    lower: &[f64],
    upper: &[f64],
    opts: &NelderMeadOptions,
) -> Minimum
where
    F: Fn(&[f64]) -> f64,
{
    let n = start.len();
    let eval = |x: &[f64]| {
        let v = f(x);
        if v.is_nan() {
            f64::INFINITY
        } else {
            v
        }
    };

    let mut simplex: Vec<Vec<f64>> = Vec::with_capacity(n + 1);
    let mut x0 = start.to_vec();
    clamp_into(&mut x0, lower, upper);
    simplex.push(x0.clone());
    for i in 0..n {
        let mut x = x0.clone();
        // step away from whichever bound is farther
        if upper[i] - x[i] >= x[i] - lower[i] {
            x[i] += opts.initial_step.min(upper[i] - x[i]);
        } else {
            x[i] -= opts.initial_step.min(x[i] - lower[i]);
        }
        simplex.push(x);
    }
    let mut values: Vec<f64> = simplex.iter().map(|x| eval(x)).collect();

    let mut iterations = 0;
    let mut converged = false;
    let mut centroid = vec![0.0; n];
    let mut trial = vec![0.0; n];
    let point_at = |centroid: &[f64], worst: &[f64], coeff: f64, out: &mut Vec<f64>| {
        for j in 0..n {
            out[j] = centroid[j] + coeff * (worst[j] - centroid[j]);
        }
        clamp_into(out, lower, upper);
    };

    while iterations < opts.max_iterations {
        // order vertices by value; stable so ties keep insertion order
        let mut order: Vec<usize> = (0..=n).collect();
        order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
        simplex = order.iter().map(|&i| simplex[i].clone()).collect();
        values = order.iter().map(|&i| values[i]).collect();

        let diameter = simplex[1..]
            .iter()
            .flat_map(|x| x.iter().zip(&simplex[0]).map(|(a, b)| math::abs(a - b)))
            .fold(0.0, f64::max);
        if diameter < opts.diameter_tolerance {
            converged = true;
            break;
        }
        iterations += 1;

        centroid.iter_mut().for_each(|c| *c = 0.0);
        for x in &simplex[..n] {
            for (c, v) in centroid.iter_mut().zip(x) {
                *c += v / n as f64;
            }
        }
        let worst = simplex[n].clone();

        point_at(&centroid, &worst, -1.0, &mut trial);
        let reflected = trial.clone();
        let f_reflected = eval(&reflected);

        if f_reflected < values[0] {
            point_at(&centroid, &worst, -2.0, &mut trial);
            let f_expanded = eval(&trial);
            if f_expanded < f_reflected {
                simplex[n] = trial.clone();
                values[n] = f_expanded;
            } else {
                simplex[n] = reflected;
                values[n] = f_reflected;
            }
            continue;
        }
        if f_reflected < values[n - 1] {
            simplex[n] = reflected;
            values[n] = f_reflected;
            continue;
        }
        // contraction, outside or inside
        let (coeff, reference) = if f_reflected < values[n] {
            (-0.5, f_reflected)
        } else {
            (0.5, values[n])
        };
        point_at(&centroid, &worst, coeff, &mut trial);
        let f_contracted = eval(&trial);
        if f_contracted < reference {
            simplex[n] = trial.clone();
            values[n] = f_contracted;
            continue;
        }
        // shrink towards the best vertex
        let best = simplex[0].clone();
        for i in 1..=n {
            for j in 0..n {
                simplex[i][j] = best[j] + 0.5 * (simplex[i][j] - best[j]);
            }
            values[i] = eval(&simplex[i]);
        }
    }

    let best = (0..=n)
        .min_by(|&a, &b| values[a].total_cmp(&values[b]))
        .unwrap_or(0);
    Minimum {
        x: simplex[best].clone(),
        value: values[best],
        iterations,
        converged,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rosenbrock() {
        let f = |x: &[f64]| (1.0 - x[0]).powi(2) + 100.0 * (x[1] - x[0] * x[0]).powi(2);
        let opts = NelderMeadOptions {
            max_iterations: 5000,
            ..Default::default()
        };
        let m = nelder_mead(f, &[-1.2, 1.0], &[-5.0, -5.0], &[5.0, 5.0], &opts);
        assert!(m.converged);
        assert!((m.x[0] - 1.0).abs() < 1e-6, "{:?}", m);
        assert!((m.x[1] - 1.0).abs() < 1e-6);
    }

    #[test]
    fn respects_bounds() {
        let f = |x: &[f64]| (x[0] + 3.0).powi(2) + (x[1] - 0.5).powi(2);
        let m = nelder_mead(
            f,
            &[0.0, 0.0],
            &[-1.0, -1.0],
            &[1.0, 1.0],
            &NelderMeadOptions::default(),
        );
        assert!((m.x[0] + 1.0).abs() < 1e-7);
        assert!((m.x[1] - 0.5).abs() < 1e-6);
    }

    #[test]
    fn iteration_cap() {
        let f = |x: &[f64]| x.iter().map(|v| v * v).sum::<f64>();
        let opts = NelderMeadOptions {
            max_iterations: 3,
            ..Default::default()
        };
        let m = nelder_mead(f, &[5.0, 5.0, 5.0], &[-9.0; 3], &[9.0; 3], &opts);
        assert_eq!(m.iterations, 3);
        assert!(!m.converged);
    }
}
