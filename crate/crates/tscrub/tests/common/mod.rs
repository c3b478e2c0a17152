#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use tscrub_core::time::{parse_timestamp, FormatOrder};
use tscrub_core::Instant;

pub const HOUR: i64 = 3600;

pub fn at(text: &str) -> Instant {
    let order: FormatOrder = "ymdHMS".parse().unwrap();
    parse_timestamp(text, &order).unwrap()
}

pub const AEP_MISSING: [&str; 27] = [
    "2004-10-31 02:00:00",
    "2005-04-03 03:00:00",
    "2005-10-30 02:00:00",
    "2006-04-02 03:00:00",
    "2006-10-29 02:00:00",
    "2007-03-11 03:00:00",
    "2007-11-04 02:00:00",
    "2008-03-09 03:00:00",
    "2008-11-02 02:00:00",
    "2009-03-08 03:00:00",
    "2009-11-01 02:00:00",
    "2010-03-14 03:00:00",
    "2010-11-07 02:00:00",
    "2010-12-10 00:00:00",
    "2011-03-13 03:00:00",
    "2011-11-06 02:00:00",
    "2012-03-11 03:00:00",
    "2012-11-04 02:00:00",
    "2012-12-06 04:00:00",
    "2013-03-10 03:00:00",
    "2013-11-03 02:00:00",
    "2014-03-09 03:00:00",
    "2014-03-11 14:00:00",
    "2015-03-08 03:00:00",
    "2016-03-13 03:00:00",
    "2017-03-12 03:00:00",
    "2018-03-11 03:00:00",
];

pub const AEP_DUPLICATES: [&str; 4] = [
    "2014-11-02 02:00:00",
    "2015-11-01 02:00:00",
    "2016-11-06 02:00:00",
    "2017-11-05 02:00:00",
];

pub const AEP_START: &str = "2004-10-01 01:00:00";
pub const AEP_END: &str = "2018-08-03 00:00:00";
pub const AEP_MIN: f64 = 9581.0;
pub const AEP_MAX: f64 = 25164.0;

fn gauss(rng: &mut ChaCha8Rng) -> f64 {
    // Box-Muller
    let u: f64 = rng.gen_range(f64::EPSILON..1.0);
    let v: f64 = rng.gen();
    (-2.0 * u.ln()).sqrt() * (2.0 * std::f64::consts::PI * v).cos()
}

/// Hourly load-like series in the shape of the AEP power file: 27 hours
/// missing, 4 hours written twice with different readings, and the rows
/// stored in reverse year order. Readings are integers spanning
/// [`AEP_MIN`, `AEP_MAX`].
pub fn aep_csv() -> String {
    let start = at(AEP_START).0;
    let end = at(AEP_END).0;
    let n = ((end - start) / HOUR + 1) as usize;
    let mut rng = ChaCha8Rng::seed_from_u64(2004);
    let tau = 2.0 * std::f64::consts::PI;
    let raw: Vec<f64> = (0..n)
        .map(|i| {
            let t = start + i as i64 * HOUR;
            let hour = (t.rem_euclid(86_400) / HOUR) as f64;
            let day = t.div_euclid(86_400) as f64;
            let weekday = (t.div_euclid(86_400) + 4).rem_euclid(7);
            let yearly = 1800.0 * (tau * 2.0 * day / 365.25).cos();
            let daily = 1900.0 * (tau * (hour - 18.0) / 24.0).cos() + 600.0 * (tau * (hour - 9.0) / 12.0).cos();
            let weekend = if weekday >= 5 { -900.0 } else { 0.0 };
            15_000.0 + yearly + daily + weekend - 20.0 * day / 365.25 + 180.0 * gauss(&mut rng)
        })
        .collect();
    let (lo, hi) = raw
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(*v), b.max(*v)));
    let values: Vec<i64> = raw
        .iter()
        .map(|v| (AEP_MIN + (v - lo) * (AEP_MAX - AEP_MIN) / (hi - lo)).round() as i64)
        .collect();

    let missing: Vec<i64> = AEP_MISSING.iter().map(|s| at(s).0).collect();
    let dups: Vec<i64> = AEP_DUPLICATES.iter().map(|s| at(s).0).collect();
    let mut by_year: std::collections::BTreeMap<i64, Vec<String>> = Default::default();
    for (i, v) in values.iter().enumerate() {
        let t = Instant(start + i as i64 * HOUR);
        if missing.contains(&t.0) {
            continue;
        }
        let year = t.to_civil().year;
        let rows = by_year.entry(year).or_default();
        let text = t.to_display();
        rows.push(format!("{text},{v}"));
        if dups.contains(&t.0) {
            rows.push(format!("{text},{}", v - 37));
        }
    }
    let mut out = String::from("Datetime,AEP_MW\n");
    for rows in by_year.values().rev() {
        for r in rows {
            out.push_str(r);
            out.push('\n');
        }
    }
    out
}

pub const CO2_START: &str = "2016-12-31 23:00:00";
pub const CO2_LEN: usize = 1392;

/// First hour of each 24-hour gap in the CO2-like fixture.
pub const CO2_GAPS: [&str; 7] = [
    "2017-01-02 23:00:00",
    "2017-01-10 05:00:00",
    "2017-01-19 11:00:00",
    "2017-01-28 17:00:00",
    "2017-02-05 08:00:00",
    "2017-02-14 14:00:00",
    "2017-02-23 23:00:00",
];

/// Hourly emission-intensity-like series: 1392 points, seven 24-hour
/// gaps, a slowly wandering level and weak daily cycle under noise.
pub fn co2_csv() -> String {
    let start = at(CO2_START).0;
    let gaps: Vec<usize> = CO2_GAPS
        .iter()
        .map(|s| ((at(s).0 - start) / HOUR) as usize)
        .collect();
    let mut rng = ChaCha8Rng::seed_from_u64(2017);
    let tau = 2.0 * std::f64::consts::PI;
    let mut level = 400.0;
    let mut drift = 0.0;
    let mut out = String::from("area,MK\n");
    for i in 0..CO2_LEN {
        drift = 0.97 * drift + 0.6 * gauss(&mut rng);
        level += drift;
        level += 0.02 * (400.0 - level);
        let t = Instant(start + i as i64 * HOUR);
        let in_gap = gaps.iter().any(|&g| i >= g && i < g + 24);
        let v = level + 6.0 * (tau * i as f64 / 24.0).sin() + rng.gen_range(-8.0..8.0);
        if in_gap {
            out.push_str(&format!("{},\n", t.to_display()));
        } else {
            out.push_str(&format!("{},{:.2}\n", t.to_display(), v));
        }
    }
    out
}

pub fn write_temp(dir: &std::path::Path, name: &str, text: &str) -> std::path::PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p
}
