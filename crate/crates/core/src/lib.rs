//! Clustering of daily electric load profiles.
//!
//! The crate is organised as a chain of stages, each consuming an immutable
//! value and producing a new one:
//!
//! * [`dataset`]: CSV ingestion through a column mapping, resampling and gap filling.
//! * [`representation`]: per-series normalization and functional PCA.
//! * [`metrics`]: euclidean, dynamic time warping and shape-based distances.
//! * [`clustering`]: k-means, k-medoids (PAM), agglomerative hierarchical and
//!   k-shape, plus a k-sweep with elbow detection.
//! * [`validity`]: silhouette, Davies-Bouldin and Caliński-Harabasz indexes.
//! * [`pipeline`]: configuration, orchestration and the JSON/HTML artifacts.
//!
//! Data-parallel loops (pairwise distances, restarts, sweeps, per-point
//! scores) run on rayon when the `parallel` feature is enabled, which it is by
//! default. Every parallel loop collects into index order before reducing, so
//! results do not depend on the thread count.

pub mod clustering;
pub mod dataset;
pub mod error;
pub mod metrics;
mod par;
pub mod pipeline;
pub mod representation;
pub mod validity;

pub use error::{Error, Result};

/// Runs `f` on a dedicated pool capped at `threads` workers.
///
/// Without the `parallel` feature this simply calls `f`.
pub fn with_thread_limit<R: Send>(threads: usize, f: impl FnOnce() -> R + Send) -> R {
    par::with_threads(threads, f)
}
