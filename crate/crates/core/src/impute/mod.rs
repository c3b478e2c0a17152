//! Imputation methods.
//!
//! Every method takes a value sequence with gaps (`None`) and returns a
//! fully observed sequence of the same length, leaving observed values
//! untouched. Leading and trailing gaps are filled by constant extension
//! (interpolation) or backward fill (LOCF) so that all built-ins are total
//! given at least one observation.

use alloc::string::String;
use alloc::sync::Arc;
use alloc::vec::Vec;
use core::fmt;

use crate::series::MethodId;

pub mod kalman;

pub use kalman::{fit_kalman, impute_kalman, KalmanModel};

pub const NA_INTERPOLATION: &str = "na_interpolation";
pub const NA_LOCF: &str = "na_locf";
pub const NA_MA: &str = "na_ma";
pub const NA_KALMAN: &str = "na_kalman";

/// The built-in method ids in their default order.
pub const DEFAULT_METHODS: [&str; 4] = [NA_INTERPOLATION, NA_LOCF, NA_MA, NA_KALMAN];

/// Default half-width of the moving-average window.
pub const DEFAULT_MA_HALF_WIDTH: usize = 4;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ImputeError {
    #[error("every value is missing")]
    AllMissing,
    #[error("need at least {needed} observed values, found {found}")]
    TooFewObserved { needed: usize, found: usize },
    #[error("log-likelihood is not finite")]
    NonFiniteLikelihood,
    #[error("method '{id}' broke its contract: {reason}")]
    ContractViolation { id: MethodId, reason: String },
    #[error("method '{id}' failed: {reason}")]
    MethodFailed { id: MethodId, reason: String },
    #[error("a method named '{0}' is already registered")]
    DuplicateId(MethodId),
    #[error("unknown imputation method '{0}'")]
    UnknownMethod(MethodId),
}

type FillFn = dyn Fn(&[Option<f64>]) -> Result<Vec<f64>, ImputeError> + Send + Sync;

/// A named fill function.
#[derive(Clone)]
pub struct ImputationMethod {
    id: MethodId,
    fill: Arc<FillFn>,
}

impl fmt::Debug for ImputationMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ImputationMethod").field("id", &self.id).finish()
    }
}

impl ImputationMethod {
    pub fn new<F>(id: impl Into<MethodId>, fill: F) -> Self
    where
        F: Fn(&[Option<f64>]) -> Result<Vec<f64>, ImputeError> + Send + Sync + 'static,
    {
        ImputationMethod {
            id: id.into(),
            fill: Arc::new(fill),
        }
    }

    pub fn id(&self) -> &MethodId {
        &self.id
    }

    /// Runs the method and enforces its contract: same length, finite
    /// output. Observed positions are restored from the input.
    pub fn apply(&self, values: &[Option<f64>]) -> Result<Vec<f64>, ImputeError> {
        let mut out = (self.fill)(values)?;
        if out.len() != values.len() {
            return Err(self.violation(alloc::format!(
                "returned {} values for {} inputs",
                out.len(),
                values.len()
            )));
        }
        if let Some(i) = out.iter().position(|v| !v.is_finite()) {
            return Err(self.violation(alloc::format!("value at index {i} is not finite")));
        }
        for (o, v) in out.iter_mut().zip(values) {
            if let Some(v) = v {
                *o = *v;
            }
        }
        Ok(out)
    }

    fn violation(&self, reason: String) -> ImputeError {
        ImputeError::ContractViolation {
            id: self.id.clone(),
            reason,
        }
    }
}

impl From<String> for MethodId {
    fn from(s: String) -> Self {
        MethodId(s)
    }
}

/// Methods available to the benchmark, looked up by id.
#[derive(Debug, Clone, Default)]
pub struct MethodRegistry {
    methods: Vec<ImputationMethod>,
}

impl MethodRegistry {
    pub fn empty() -> Self {
        MethodRegistry::default()
    }

    /// Registry holding the four built-ins.
    pub fn with_defaults() -> Self {
        let mut r = MethodRegistry::empty();
        r.methods.push(ImputationMethod::new(NA_INTERPOLATION, impute_interpolation));
        r.methods.push(ImputationMethod::new(NA_LOCF, impute_locf));
        r.methods.push(ImputationMethod::new(NA_MA, |v: &[Option<f64>]| {
            impute_moving_average(v, DEFAULT_MA_HALF_WIDTH)
        }));
        r.methods.push(ImputationMethod::new(NA_KALMAN, impute_kalman));
        r
    }

    pub fn register(&mut self, method: ImputationMethod) -> Result<(), ImputeError> {
        if self.get(method.id().as_str()).is_some() {
            return Err(ImputeError::DuplicateId(method.id().clone()));
        }
        self.methods.push(method);
        Ok(())
    }

    pub fn get(&self, id: &str) -> Option<&ImputationMethod> {
        self.methods.iter().find(|m| m.id().as_str() == id)
    }

    pub fn resolve(&self, id: &MethodId) -> Result<&ImputationMethod, ImputeError> {
        self.get(id.as_str())
            .ok_or_else(|| ImputeError::UnknownMethod(id.clone()))
    }

    pub fn ids(&self) -> impl Iterator<Item = &MethodId> {
        self.methods.iter().map(|m| m.id())
    }
}

fn observed_indices(values: &[Option<f64>]) -> Vec<usize> {
    values
        .iter()
        .enumerate()
        .filter_map(|(i, v)| v.map(|_| i))
        .collect()
}

/// Linear interpolation on the index axis; constant extension at the ends.
pub fn impute_interpolation(values: &[Option<f64>]) -> Result<Vec<f64>, ImputeError> {
    let obs = observed_indices(values);
    let (&first, &last) = match (obs.first(), obs.last()) {
        (Some(f), Some(l)) => (f, l),
        _ => return Err(ImputeError::AllMissing),
    };
    let at = |i: usize| values[i].unwrap_or_default();
    let mut out = Vec::with_capacity(values.len());
    out.extend(core::iter::repeat_n(at(first), first));
    for w in obs.windows(2) {
        let (a, b) = (w[0], w[1]);
        let (ya, yb) = (at(a), at(b));
        out.push(ya);
        let span = (b - a) as f64;
        for i in a + 1..b {
            let frac = (i - a) as f64 / span;
            out.push(ya + (yb - ya) * frac);
        }
    }
    out.push(at(last));
    out.extend(core::iter::repeat_n(at(last), values.len() - last - 1));
    Ok(out)
}

/// Last observation carried forward; leading gaps take the first
/// observation.
pub fn impute_locf(values: &[Option<f64>]) -> Result<Vec<f64>, ImputeError> {
    let first = values.iter().find_map(|v| *v).ok_or(ImputeError::AllMissing)?;
    let mut last = first;
    Ok(values
        .iter()
        .map(|v| {
            if let Some(v) = v {
                last = *v;
            }
            last
        })
        .collect())
}

/// Simple (unweighted) moving average of the observed values within
/// `half_width` positions of each gap. When a window holds no observation
/// the half-width doubles until one is covered.
pub fn impute_moving_average(
    values: &[Option<f64>],
    half_width: usize,
) -> Result<Vec<f64>, ImputeError> {
    if values.iter().all(Option::is_none) {
        return Err(ImputeError::AllMissing);
    }
    let n = values.len();
    let mut out = Vec::with_capacity(n);
    for (i, v) in values.iter().enumerate() {
        if let Some(v) = v {
            out.push(*v);
            continue;
        }
        let mut k = half_width.max(1);
        loop {
            let lo = i.saturating_sub(k);
            let hi = (i + k).min(n - 1);
            let (sum, count) = values[lo..=hi]
                .iter()
                .flatten()
                .fold((0.0, 0usize), |(s, c), x| (s + x, c + 1));
            if count > 0 {
                out.push(sum / count as f64);
                break;
            }
            k *= 2;
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;
    use proptest::prelude::*;

    const X: Option<f64> = None;

    fn s(v: &[f64]) -> Vec<Option<f64>> {
        v.iter().map(|x| Some(*x)).collect()
    }

    #[test]
    fn interpolation_cases() {
        assert_eq!(
            impute_interpolation(&[Some(1.0), X, Some(3.0)]).unwrap(),
            [1.0, 2.0, 3.0]
        );
        assert_eq!(
            impute_interpolation(&[X, Some(2.0), Some(4.0)]).unwrap(),
            [2.0, 2.0, 4.0]
        );
        assert_eq!(
            impute_interpolation(&[Some(1.0), X, X, Some(4.0)]).unwrap(),
            [1.0, 2.0, 3.0, 4.0]
        );
        assert_eq!(
            impute_interpolation(&[Some(1.0), X, X]).unwrap(),
            [1.0, 1.0, 1.0]
        );
        assert_eq!(impute_interpolation(&[X, X]), Err(ImputeError::AllMissing));
        assert!(impute_interpolation(&[]).is_err());
    }

    #[test]
    fn locf_cases() {
        assert_eq!(
            impute_locf(&[Some(1.0), X, X, Some(4.0)]).unwrap(),
            [1.0, 1.0, 1.0, 4.0]
        );
        assert_eq!(impute_locf(&[X, Some(2.0)]).unwrap(), [2.0, 2.0]);
        assert_eq!(impute_locf(&s(&[3.0, 1.0])).unwrap(), [3.0, 1.0]);
        assert_eq!(impute_locf(&[X]), Err(ImputeError::AllMissing));
    }

    #[test]
    fn moving_average_cases() {
        assert_eq!(
            impute_moving_average(&[Some(1.0), X, Some(3.0)], 1).unwrap(),
            [1.0, 2.0, 3.0]
        );
        // the middle gap sees nothing at distance 1, so k doubles to 2
        assert_eq!(
            impute_moving_average(&[Some(10.0), X, X, X, Some(20.0)], 1).unwrap(),
            [10.0, 10.0, 15.0, 20.0, 20.0]
        );
        assert_eq!(
            impute_moving_average(&s(&[1.0, 5.0]), 4).unwrap(),
            [1.0, 5.0]
        );
        assert_eq!(
            impute_moving_average(&[X, X], 4),
            Err(ImputeError::AllMissing)
        );
    }

    #[test]
    fn registry() {
        let mut r = MethodRegistry::with_defaults();
        assert_eq!(r.ids().count(), 4);
        r.register(ImputationMethod::new("mean_fill", |v: &[Option<f64>]| {
            let obs: Vec<f64> = v.iter().flatten().copied().collect();
            let m = obs.iter().sum::<f64>() / obs.len() as f64;
            Ok(v.iter().map(|x| x.unwrap_or(m)).collect())
        }))
        .unwrap();
        assert_eq!(r.ids().count(), 5);
        let dup = r.register(ImputationMethod::new(NA_LOCF, impute_locf));
        assert_eq!(dup, Err(ImputeError::DuplicateId(NA_LOCF.into())));
        assert_eq!(
            r.get("mean_fill").unwrap().apply(&[Some(1.0), X, Some(3.0)]).unwrap(),
            [1.0, 2.0, 3.0]
        );
        assert!(matches!(
            r.resolve(&"nope".into()),
            Err(ImputeError::UnknownMethod(_))
        ));
    }

    #[test]
    fn contract_is_checked_at_call_time() {
        let short = ImputationMethod::new("short", |_: &[Option<f64>]| Ok(vec![1.0]));
        assert!(matches!(
            short.apply(&[Some(1.0), X]),
            Err(ImputeError::ContractViolation { .. })
        ));
        let nan = ImputationMethod::new("nan", |v: &[Option<f64>]| Ok(vec![f64::NAN; v.len()]));
        assert!(matches!(
            nan.apply(&[Some(1.0), X]),
            Err(ImputeError::ContractViolation { .. })
        ));
    }

    fn gappy() -> impl Strategy<Value = Vec<Option<f64>>> {
        prop::collection::vec(prop::option::weighted(0.7, -1e6f64..1e6), 1..60)
            .prop_filter("needs one observation", |v| v.iter().any(Option::is_some))
    }

    proptest! {
        #[test]
        fn methods_are_total_and_keep_observations(values in gappy()) {
            let registry = MethodRegistry::with_defaults();
            for id in [NA_INTERPOLATION, NA_LOCF, NA_MA] {
                let out = registry.get(id).unwrap().apply(&values).unwrap();
                prop_assert_eq!(out.len(), values.len());
                for (o, v) in out.iter().zip(&values) {
                    prop_assert!(o.is_finite());
                    if let Some(v) = v {
                        prop_assert_eq!(o, v);
                    }
                }
            }
        }

        #[test]
        fn interpolation_is_exact_on_affine(
            a in -1e3f64..1e3,
            b in -10f64..10.0,
            n in 3usize..80,
            gaps in prop::collection::vec(any::<bool>(), 80),
        ) {
            let truth: Vec<f64> = (0..n).map(|i| a + b * i as f64).collect();
            // interior gaps only
            let values: Vec<Option<f64>> = truth
                .iter()
                .enumerate()
                .map(|(i, &y)| if i > 0 && i + 1 < n && gaps[i] { None } else { Some(y) })
                .collect();
            let out = impute_interpolation(&values).unwrap();
            for (o, t) in out.iter().zip(&truth) {
                prop_assert!((o - t).abs() <= 1e-9 * (1.0 + t.abs()));
            }
        }
    }
}
