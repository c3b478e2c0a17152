use super::*;
use alloc::vec;
use core::f64::consts::PI;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn sinusoid(n: usize, period: f64, amplitude: f64) -> Vec<f64> {
    (0..n)
        .map(|i| amplitude * (2.0 * PI * i as f64 / period).sin())
        .collect()
}

fn noisy_seasonal(n: usize, seed: u64, noise: f64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    sinusoid(n, 24.0, 1.0)
        .into_iter()
        .enumerate()
        .map(|(i, v)| v + 0.002 * i as f64 + noise * rng.gen_range(-1.0..1.0))
        .collect()
}

fn rms(v: &[f64]) -> f64 {
    (v.iter().map(|x| x * x).sum::<f64>() / v.len() as f64).sqrt()
}

#[test]
fn period_of_hourly_sinusoid() {
    assert_eq!(infer_period(&sinusoid(500, 24.0, 3.0), 3600), Ok(24));
}

#[test]
fn period_from_acf_peaks() {
    assert_eq!(infer_period(&sinusoid(300, 12.0, 1.0), 60), Ok(12));
}

#[test]
fn white_noise_has_no_period() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let v: Vec<f64> = (0..500).map(|_| rng.gen_range(-1.0..1.0)).collect();
    assert_eq!(infer_period(&v, 3600), Ok(1));
    assert_eq!(infer_period(&v, 60), Ok(1));
}

#[test]
fn short_series_has_no_period() {
    assert_eq!(
        infer_period(&[1.0; 5], 3600),
        Err(AnomalyError::SeriesTooShort { needed: 8, found: 5 })
    );
}

#[test]
fn constant_decomposes_to_trend() {
    let d = decompose(&[4.5; 96], 24).unwrap();
    assert!(d.seasonal.iter().all(|s| s.abs() < 1e-9));
    assert!(d.trend.iter().all(|t| (t - 4.5).abs() < 1e-9));
    assert!(d.remainder.iter().all(|r| r.abs() < 1e-9));
}

#[test]
fn too_short_for_period() {
    assert_eq!(
        decompose(&[1.0; 30], 24),
        Err(AnomalyError::SeriesTooShort { needed: 48, found: 30 })
    );
    assert_eq!(decompose(&[1.0; 30], 0), Err(AnomalyError::ZeroPeriod));
}

#[test]
fn sinusoid_plus_line_decomposes_cleanly() {
    for period in [7usize, 12, 24] {
        let amplitude = 5.0;
        let y: Vec<f64> = sinusoid(20 * period, period as f64, amplitude)
            .into_iter()
            .enumerate()
            .map(|(i, v)| v + 10.0 + 0.05 * i as f64)
            .collect();
        let d = decompose(&y, period).unwrap();
        assert!(rms(&d.remainder) < 0.05 * amplitude, "period {period}: {}", rms(&d.remainder));
    }
}

#[test]
fn seasonal_sums_to_zero_per_cycle() {
    let y = noisy_seasonal(480, 3, 0.3);
    let d = decompose(&y, 24).unwrap();
    for chunk in d.seasonal.chunks_exact(24) {
        let mean = chunk.iter().sum::<f64>() / 24.0;
        assert!(mean.abs() < 1e-6, "{mean}");
    }
}

#[test]
fn identity_is_exact_on_random_level_series() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for case in 0..100 {
        let n = rng.gen_range(10..300);
        let scale = 10f64.powi(rng.gen_range(-3..7));
        let y: Vec<f64> = (0..n)
            .map(|i| 5.0 * scale + scale * (i as f64 / 4.0).sin() + scale * rng.gen_range(-1.0..1.0))
            .collect();
        let period = [1, 2, 4, 5][case % 4];
        let d = decompose(&y, period).unwrap();
        for (i, &yi) in y.iter().enumerate() {
            assert_eq!(d.seasonal[i] + d.trend[i] + d.remainder[i], yi, "case {case} index {i}");
        }
    }
}

#[test]
fn residual_within_one_ulp_when_identity_is_unrepresentable() {
    // the fit is far above y and cancels: r needs finer bits than its binade has
    let (y, fit) = (51919.85242550912, 461211.46093538293);
    let r = exact_residual(y, fit);
    assert_ne!(fit + r, y);
    assert!((fit + r - y).abs() <= r.abs() * f64::EPSILON);
    assert_eq!(exact_residual(3.0, 2.5) + 2.5, 3.0);
}

#[test]
fn fences_match_hand_computation() {
    let cases: [(&[f64], f64, (f64, f64)); 5] = [
        (&[1.0, 2.0, 3.0, 4.0], 0.05, (-2.75, 7.75)),
        (&[1.0, 2.0, 3.0, 4.0, 5.0], 0.05, (-4.0, 10.0)),
        (&[3.0, 1.0, 2.0], 0.05, (-1.5, 5.5)),
        (&[10.0, 20.0], 0.15, (7.5, 22.5)),
        (&[-5.0, -1.0, 0.0, 2.0, 8.0, 9.0], 0.1, (-11.625, 17.375)),
    ];
    for (v, alpha, (lo, hi)) in cases {
        let (a, b) = iqr_bounds(v, alpha);
        assert!((a - lo).abs() < 1e-12 && (b - hi).abs() < 1e-12, "{v:?}: {a} {b}");
    }
}

#[test]
fn degenerate_fences() {
    assert_eq!(iqr_bounds(&[2.0; 6], 0.05), (2.0, 2.0));
}

#[test]
fn spike_is_the_only_outlier() {
    let mut y = noisy_seasonal(500, 5, 0.2);
    y[250] += 10.0;
    let got = detect_outliers(&y, &AnomalyConfig::default(), 3600).unwrap();
    assert_eq!(got, vec![250]);
}

#[test]
fn clean_sinusoid_has_no_outliers() {
    let y = sinusoid(480, 24.0, 2.0);
    assert_eq!(detect_outliers(&y, &AnomalyConfig::default(), 3600).unwrap(), Vec::<usize>::new());
}

#[test]
fn constant_with_one_deviant() {
    let mut y = vec![3.0; 40];
    y[17] = 4.0;
    let cfg = AnomalyConfig {
        period: Some(1),
        ..AnomalyConfig::default()
    };
    assert_eq!(detect_outliers(&y, &cfg, 60).unwrap(), vec![17]);
}

#[test]
fn bad_alpha() {
    let cfg = AnomalyConfig {
        alpha: 1.5,
        ..AnomalyConfig::default()
    };
    assert_eq!(detect_outliers(&[1.0; 10], &cfg, 60), Err(AnomalyError::BadAlpha));
}

fn base() -> Vec<f64> {
    (0..60).map(|i| (i as f64 * 0.3).sin() * 4.0 + i as f64 * 0.1).collect()
}

#[test]
fn no_indices_no_change() {
    let y = base();
    let r = replace_outliers(&y, &[], &BenchmarkConfig::default(), &MethodRegistry::with_defaults())
        .unwrap();
    assert_eq!(r.values, y);
    assert!(r.replacements.is_empty());
    assert_eq!((r.mcar_err, r.mar_err), (None, None));
}

#[test]
fn isolated_outlier_routes_mcar() {
    let mut y = base();
    y[30] = 100.0;
    let r = replace_outliers(&y, &[30], &BenchmarkConfig::default(), &MethodRegistry::with_defaults())
        .unwrap();
    assert_eq!(r.replacements.len(), 1);
    assert_eq!(r.replacements[0].mechanism, Mechanism::Mcar);
    assert_eq!(r.replacements[0].orig_value, 100.0);
    assert!(r.mcar_err.is_some() && r.mar_err.is_none());
    assert!((r.values[30] - base()[30]).abs() < 1.0);
}

#[test]
fn run_of_outliers_routes_mar() {
    let mut y = base();
    for v in &mut y[20..23] {
        *v = -50.0;
    }
    let r = replace_outliers(&y, &[20, 21, 22], &BenchmarkConfig::default(), &MethodRegistry::with_defaults())
        .unwrap();
    assert_eq!(r.replacements.len(), 3);
    assert!(r.replacements.iter().all(|x| x.mechanism == Mechanism::Mar));
    assert!(r.mcar_err.is_none() && r.mar_err.is_some());
}

proptest! {
    #[test]
    fn shift_invariance(
        values in proptest::collection::vec(-1000i32..1000, 8..120),
        shift in -100_000i32..100_000,
    ) {
        let y: Vec<f64> = values.iter().map(|v| *v as f64).collect();
        let shifted: Vec<f64> = y.iter().map(|v| v + shift as f64).collect();
        let cfg = AnomalyConfig::default();
        prop_assert_eq!(
            detect_outliers(&y, &cfg, 3600).unwrap(),
            detect_outliers(&shifted, &cfg, 3600).unwrap()
        );
    }

    #[test]
    fn untouched_outside_flags(
        values in proptest::collection::vec(-50.0f64..50.0, 30..80),
        flags in proptest::collection::btree_set(1usize..29, 0..5),
    ) {
        let idx: Vec<usize> = flags.into_iter().collect();
        let r = replace_outliers(&values, &idx, &BenchmarkConfig::default(), &MethodRegistry::with_defaults())
            .unwrap();
        for (i, v) in values.iter().enumerate() {
            if !idx.contains(&i) {
                prop_assert_eq!(r.values[i], *v);
            }
        }
        prop_assert_eq!(r.replacements.len(), idx.len());
    }
}



