//! Cleaning engine for univariate time series.
//!
//! The crate is `no_std` (it only needs `alloc`) and contains every
//! algorithmic stage of the cleaner:
//!
//! * [`time`]: order-based timestamp parsing into UTC [`Instant`]s.
//! * [`table`]: column selection and value coercion over raw string tables.
//! * [`timeline`]: interval inference, missing timestamp insertion and
//!   duplicate resolution.
//! * [`impute`]: the built-in imputation methods (linear interpolation,
//!   LOCF, moving average, Kalman smoothing of a local linear trend model)
//!   and the method registry.
//! * [`benchmark`]: gap classification, simulated missingness and method
//!   selection.
//! * [`anomaly`]: seasonal-trend decomposition and IQR outlier fences.
//! * [`pipeline`]: the end-to-end [`clean`](pipeline::clean) entry point.
//! * [`report`] and [`windows`]: text reports and micro-scale windows.
//!
//! File IO, the command line and the HTTP service live in the `tscrub`
//! crate.

#![cfg_attr(not(any(test, feature = "std")), no_std)]
#![warn(missing_debug_implementations, rust_2018_idioms)]

extern crate alloc;

pub mod anomaly;
pub mod benchmark;
pub mod impute;
mod math;
pub mod optim;
pub mod pipeline;
pub mod report;
pub mod series;
pub mod stats;
pub mod table;
pub mod time;
pub mod timeline;
pub mod windows;

pub use crate::pipeline::{clean, CleanConfig, CleanError};
pub use crate::series::{
    AnnotatedPoint, ChangeEntry, ChangeKind, CleanResult, ErrorRow, Mechanism, MethodId,
    OutlierRecord, RawSeries, RawTable, TimeSeries,
};
pub use crate::time::{FormatOrder, Instant};
