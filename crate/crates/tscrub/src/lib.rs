//! File IO, merging, external imputation methods, frame rendering and the
//! HTTP service around `tscrub-core`.

pub mod external;
pub mod frames;
pub mod io;
pub mod merge;
pub mod service;

pub use tscrub_core as core;

/// Environment variable capping worker threads.
pub const THREADS_ENV: &str = "TSCRUB_THREADS";

/// Sizes the global worker pool from `TSCRUB_THREADS` when it is set to a
/// positive integer. Returns the cap that was applied.
pub fn configure_threads() -> Option<usize> {
    let n = std::env::var(THREADS_ENV).ok()?.trim().parse::<usize>().ok()?;
    if n == 0 {
        return None;
    }
    match rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
        Ok(()) => Some(n),
        Err(e) => {
            log::warn!("{THREADS_ENV} ignored: {e}");
            None
        }
    }
}
