//! Benchmark-driven method selection.
//!
//! Gaps are split into MCAR (isolated single points) and MAR (runs of two
//! or more). For each mechanism present, the longest gap-free segment of
//! the series is masked the same way several times, every candidate method
//! fills the masked copy, and the RMSE against the hidden truth is
//! averaged. The method with the lowest mean error wins.

use alloc::vec::Vec;

use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::impute::{
    impute_interpolation, ImputationMethod, ImputeError, MethodRegistry, DEFAULT_METHODS,
    NA_INTERPOLATION,
};
use crate::math;
use crate::series::{ErrorRow, Mechanism, MethodId};

/// Shortest gap-free segment the benchmark accepts.
pub const MIN_SEGMENT_LEN: usize = 20;
/// Rejected block placements tolerated before giving up.
pub const MAX_REJECTED_PLACEMENTS: usize = 1000;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum BenchmarkError {
    #[error("simulated fraction {fraction} of {n} points masks nothing")]
    FractionTooSmall { fraction: f64, n: usize },
    #[error("could not place missing blocks after {MAX_REJECTED_PLACEMENTS} attempts")]
    CannotPlaceBlocks,
    #[error("no block lengths to sample MAR gaps from")]
    NoBlockLengths,
    #[error("longest gap-free segment has {0} points, need {MIN_SEGMENT_LEN}")]
    SegmentTooShort(usize),
    #[error("score inputs differ in length")]
    LengthMismatch,
    #[error("score needs at least one masked position")]
    EmptyMask,
    #[error("invalid benchmark config: {0}")]
    BadConfig(&'static str),
    #[error(transparent)]
    Impute(#[from] ImputeError),
}

/// A maximal run of consecutive gaps.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct GapRun {
    pub start: usize,
    pub len: usize,
    pub mechanism: Mechanism,
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct GapClassification {
    runs: Vec<GapRun>,
}

impl GapClassification {
    pub fn runs(&self) -> &[GapRun] {
        &self.runs
    }

    pub fn is_empty(&self) -> bool {
        self.runs.is_empty()
    }

    pub fn has(&self, mechanism: Mechanism) -> bool {
        self.runs.iter().any(|r| r.mechanism == mechanism)
    }

    /// Total gap positions of `mechanism`.
    pub fn count(&self, mechanism: Mechanism) -> usize {
        self.runs
            .iter()
            .filter(|r| r.mechanism == mechanism)
            .map(|r| r.len)
            .sum()
    }

    /// Lengths of the runs of `mechanism`, in series order.
    pub fn block_lengths(&self, mechanism: Mechanism) -> Vec<usize> {
        self.runs
            .iter()
            .filter(|r| r.mechanism == mechanism)
            .map(|r| r.len)
            .collect()
    }
}

/// Splits the gaps of `values` into maximal runs; length-1 runs are MCAR,
/// longer runs MAR.
pub fn classify_gaps(values: &[Option<f64>]) -> GapClassification {
    classify_mask(values.iter().map(Option::is_none))
}

/// Same as [`classify_gaps`] for a boolean gap mask.
pub fn classify_mask(mask: impl IntoIterator<Item = bool>) -> GapClassification {
    let mut runs = Vec::new();
    let mut open: Option<usize> = None;
    let mut n = 0;
    let close = |start: usize, end: usize, runs: &mut Vec<GapRun>| {
        let len = end - start;
        runs.push(GapRun {
            start,
            len,
            mechanism: if len == 1 {
                Mechanism::Mcar
            } else {
                Mechanism::Mar
            },
        });
    };
    for (i, gap) in mask.into_iter().enumerate() {
        n = i + 1;
        match (gap, open) {
            (true, None) => open = Some(i),
            (false, Some(s)) => {
                close(s, i, &mut runs);
                open = None;
            }
            _ => {}
        }
    }
    if let Some(s) = open {
        close(s, n, &mut runs);
    }
    GapClassification { runs }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Metric {
    #[default]
    Rmse,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkConfig {
    pub methods: Vec<MethodId>,
    pub sim_fraction: f64,
    pub repetitions: usize,
    pub seed: u64,
    pub metric: Metric,
}

impl Default for BenchmarkConfig {
    fn default() -> Self {
        BenchmarkConfig {
            methods: DEFAULT_METHODS.iter().map(|m| MethodId::from(*m)).collect(),
            sim_fraction: 0.10,
            repetitions: 5,
            seed: 42,
            metric: Metric::Rmse,
        }
    }
}

impl BenchmarkConfig {
    pub fn validate(&self) -> Result<(), BenchmarkError> {
        if self.methods.is_empty() {
            return Err(BenchmarkError::BadConfig("no methods configured"));
        }
        if !(self.sim_fraction > 0.0 && self.sim_fraction < 1.0) {
            return Err(BenchmarkError::BadConfig("sim_fraction must be in (0, 1)"));
        }
        if self.repetitions == 0 {
            return Err(BenchmarkError::BadConfig("repetitions must be positive"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Simulated {
    pub masked: Vec<Option<f64>>,
    pub mask: Vec<bool>,
}

fn target_count(n: usize, fraction: f64) -> Result<usize, BenchmarkError> {
    let target = math::round(fraction * n as f64) as usize;
    if target < 1 {
        return Err(BenchmarkError::FractionTooSmall { fraction, n });
    }
    Ok(target)
}

/// Hides part of a gap-free sequence.
///
/// MCAR masks exactly `round(fraction * n)` positions drawn without
/// replacement. MAR places non-overlapping blocks whose lengths are drawn
/// from `block_lengths` until at least that many positions are masked.
/// The first and last positions are never masked, so every simulated gap
/// has ground truth on both sides.
pub fn simulate_missing(
    observed: &[f64],
    mechanism: Mechanism,
    fraction: f64,
    block_lengths: &[usize],
    seed: u64,
) -> Result<Simulated, BenchmarkError> {
    let n = observed.len();
    let target = target_count(n, fraction)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut mask = alloc::vec![false; n];
    match mechanism {
        Mechanism::Mcar => {
            if target + 2 > n {
                return Err(BenchmarkError::FractionTooSmall { fraction, n });
            }
            for i in index::sample(&mut rng, n - 2, target) {
                mask[i + 1] = true;
            }
        }
        Mechanism::Mar => {
            if block_lengths.is_empty() {
                return Err(BenchmarkError::NoBlockLengths);
            }
            let mut masked = 0;
            let mut rejected = 0;
            while masked < target {
                let len = block_lengths[rng.gen_range(0..block_lengths.len())];
                let fits = len > 0 && len + 2 <= n;
                let start = if fits { rng.gen_range(1..=n - 1 - len) } else { 0 };
                if !fits || mask[start..start + len].iter().any(|m| *m) {
                    rejected += 1;
                    if rejected >= MAX_REJECTED_PLACEMENTS {
                        return Err(BenchmarkError::CannotPlaceBlocks);
                    }
                    continue;
                }
                mask[start..start + len].iter_mut().for_each(|m| *m = true);
                masked += len;
            }
        }
    }
    let masked = observed
        .iter()
        .zip(&mask)
        .map(|(v, m)| if *m { None } else { Some(*v) })
        .collect();
    Ok(Simulated { masked, mask })
}

/// Root mean squared error over the masked positions.
pub fn score(truth: &[f64], filled: &[f64], mask: &[bool], metric: Metric) -> Result<f64, BenchmarkError> {
    if truth.len() != filled.len() || truth.len() != mask.len() {
        return Err(BenchmarkError::LengthMismatch);
    }
    match metric {
        Metric::Rmse => {
            let (sum, count) = truth
                .iter()
                .zip(filled)
                .zip(mask)
                .filter(|(_, m)| **m)
                .fold((0.0, 0usize), |(s, c), ((t, f), _)| (s + (f - t) * (f - t), c + 1));
            if count == 0 {
                return Err(BenchmarkError::EmptyMask);
            }
            Ok(math::sqrt(sum / count as f64))
        }
    }
}

/// Longest run of present values as `(start, values)`.
pub fn longest_segment(values: &[Option<f64>]) -> (usize, Vec<f64>) {
    let (mut best_start, mut best_len) = (0, 0);
    let mut start = 0;
    for (i, v) in values.iter().enumerate() {
        if v.is_none() {
            start = i + 1;
        } else if i + 1 - start > best_len {
            best_start = start;
            best_len = i + 1 - start;
        }
    }
    let seg = values[best_start..best_start + best_len]
        .iter()
        .flatten()
        .copied()
        .collect();
    (best_start, seg)
}

fn fill_all(
    methods: &[&ImputationMethod],
    masked: &[Option<f64>],
) -> Vec<Result<Vec<f64>, ImputeError>> {
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        methods.par_iter().map(|m| m.apply(masked)).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        methods.iter().map(|m| m.apply(masked)).collect()
    }
}

/// Mean score per method over `cfg.repetitions` simulations of
/// `mechanism` on `segment`. Round `r` draws its mask from `cfg.seed + r`.
pub fn benchmark_mechanism(
    segment: &[f64],
    mechanism: Mechanism,
    block_lengths: &[usize],
    cfg: &BenchmarkConfig,
    registry: &MethodRegistry,
) -> Result<ErrorRow, BenchmarkError> {
    cfg.validate()?;
    let methods: Vec<&ImputationMethod> = cfg
        .methods
        .iter()
        .map(|id| registry.resolve(id))
        .collect::<Result<_, _>>()?;
    let mut totals = alloc::vec![0.0; methods.len()];
    for round in 0..cfg.repetitions {
        let sim = simulate_missing(
            segment,
            mechanism,
            cfg.sim_fraction,
            block_lengths,
            cfg.seed.wrapping_add(round as u64),
        )?;
        for (total, filled) in totals.iter_mut().zip(fill_all(&methods, &sim.masked)) {
            *total += score(segment, &filled?, &sim.mask, cfg.metric)?;
        }
    }
    Ok(ErrorRow::new(
        cfg.methods
            .iter()
            .cloned()
            .zip(totals.into_iter().map(|t| t / cfg.repetitions as f64))
            .collect(),
    ))
}

/// Error rows for the mechanisms present in `cls`; absent mechanisms give
/// `None`.
pub fn evaluate_methods(
    values: &[Option<f64>],
    cls: &GapClassification,
    cfg: &BenchmarkConfig,
    registry: &MethodRegistry,
) -> Result<(Option<ErrorRow>, Option<ErrorRow>), BenchmarkError> {
    cfg.validate()?;
    if cls.is_empty() {
        return Ok((None, None));
    }
    let (_, segment) = longest_segment(values);
    if segment.len() < MIN_SEGMENT_LEN {
        return Err(BenchmarkError::SegmentTooShort(segment.len()));
    }
    let mut rows = [None, None];
    for (slot, mechanism) in [Mechanism::Mcar, Mechanism::Mar].into_iter().enumerate() {
        if cls.has(mechanism) {
            let blocks = cls.block_lengths(mechanism);
            rows[slot] = Some(benchmark_mechanism(&segment, mechanism, &blocks, cfg, registry)?);
        }
    }
    let [mcar, mar] = rows;
    Ok((mcar, mar))
}

/// Lowest score; the earliest entry wins ties.
pub fn select_best(row: &ErrorRow) -> Option<&MethodId> {
    let mut best: Option<&(MethodId, f64)> = None;
    for entry in row.entries() {
        if best.is_none_or(|b| entry.1 < b.1) {
            best = Some(entry);
        }
    }
    best.map(|(id, _)| id)
}

/// Filled values plus, for every filled gap, its mechanism and method.
#[derive(Debug, Clone, PartialEq)]
pub struct Imputed {
    pub values: Vec<f64>,
    pub annotations: Vec<Option<(Mechanism, MethodId)>>,
}

/// Fills every gap from the copy produced by its mechanism's best method.
pub fn impute_by_mechanism(
    values: &[Option<f64>],
    cls: &GapClassification,
    best_mcar: Option<&ImputationMethod>,
    best_mar: Option<&ImputationMethod>,
) -> Result<Imputed, BenchmarkError> {
    let mut out = Imputed {
        values: values.iter().map(|v| v.unwrap_or(f64::NAN)).collect(),
        annotations: alloc::vec![None; values.len()],
    };
    if cls.is_empty() {
        return Ok(out);
    }
    let mut copies: Vec<(MethodId, Vec<f64>)> = Vec::new();
    for (mechanism, method) in [(Mechanism::Mcar, best_mcar), (Mechanism::Mar, best_mar)] {
        if !cls.has(mechanism) {
            continue;
        }
        let method = method.ok_or(BenchmarkError::BadConfig("no method for a present mechanism"))?;
        if !copies.iter().any(|(id, _)| id == method.id()) {
            copies.push((method.id().clone(), method.apply(values)?));
        }
    }
    for run in cls.runs() {
        let method = match run.mechanism {
            Mechanism::Mcar => best_mcar,
            Mechanism::Mar => best_mar,
        };
        let Some(method) = method else { continue };
        let (_, filled) = copies
            .iter()
            .find(|(id, _)| id == method.id())
            .expect("copy built above");
        let span = run.start..run.start + run.len;
        out.values[span.clone()].copy_from_slice(&filled[span.clone()]);
        for a in &mut out.annotations[span] {
            *a = Some((run.mechanism, method.id().clone()));
        }
    }
    Ok(out)
}

/// Result of benchmarking and filling every gap of a series.
#[derive(Debug, Clone, PartialEq)]
pub struct Filled {
    pub imputed: Imputed,
    pub classification: GapClassification,
    pub mcar_err: Option<ErrorRow>,
    pub mar_err: Option<ErrorRow>,
    /// Set when the benchmark could not run and interpolation was used.
    pub skipped: Option<BenchmarkError>,
}

fn can_fall_back(err: &BenchmarkError) -> bool {
    matches!(
        err,
        BenchmarkError::SegmentTooShort(_)
            | BenchmarkError::FractionTooSmall { .. }
            | BenchmarkError::CannotPlaceBlocks
            | BenchmarkError::NoBlockLengths
    )
}

/// Classifies the gaps of `values`, benchmarks the configured methods per
/// mechanism and fills each gap with its mechanism's winner.
///
/// When the series is too short or too sparse to simulate missingness,
/// every gap is filled by linear interpolation and no error rows are
/// produced.
pub fn benchmark_and_fill(
    values: &[Option<f64>],
    cfg: &BenchmarkConfig,
    registry: &MethodRegistry,
) -> Result<Filled, BenchmarkError> {
    let classification = classify_gaps(values);
    match evaluate_methods(values, &classification, cfg, registry) {
        Ok((mcar_err, mar_err)) => {
            let pick = |row: &Option<ErrorRow>| -> Result<Option<&ImputationMethod>, BenchmarkError> {
                match row.as_ref().and_then(select_best) {
                    Some(id) => Ok(Some(registry.resolve(id)?)),
                    None => Ok(None),
                }
            };
            let imputed = impute_by_mechanism(values, &classification, pick(&mcar_err)?, pick(&mar_err)?)?;
            Ok(Filled {
                imputed,
                classification,
                mcar_err,
                mar_err,
                skipped: None,
            })
        }
        Err(err) if can_fall_back(&err) => {
            let fallback = ImputationMethod::new(NA_INTERPOLATION, impute_interpolation);
            let imputed =
                impute_by_mechanism(values, &classification, Some(&fallback), Some(&fallback))?;
            Ok(Filled {
                imputed,
                classification,
                mcar_err: None,
                mar_err: None,
                skipped: Some(err),
            })
        }
        Err(err) => Err(err),
    }
}
