//! Core algorithms for scoring machine-generated descriptions against
//! distributions of human descriptions.
//!
//! The crate is `no_std` (with `alloc`) and performs no IO. File formats,
//! the command line and parallel scheduling live in the `hcd-eval` crate.
//!
//! * [`corpus`]: description records, the task hierarchy and grouping keys.
//! * [`embed`]: embedding matrices, normalization and cosine distance.
//! * [`calibration`]: human lower/upper bounds and the human-calibrated
//!   cosine distance (HCD).
//! * [`geometry`]: PCA, kNN label purity and divergence deltas.
//! * [`textmetrics`]: tokenization, entropy, type-token ratio, word-vector
//!   similarity, hedging and rule-based sentiment.
//! * [`lexmatch`]: reference-corpus frequencies and quantile-matched lexicons.
//! * [`syntax`]: dependency-parse features for affordance constructions.
//! * [`stats`]: percentiles, Wilcoxon signed-rank, chi-squared, bootstrap.

#![cfg_attr(not(test), no_std)]
#![warn(missing_debug_implementations)]
// Negated comparisons reject NaN; index loops mirror the matrix algebra.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

extern crate alloc;

pub mod calibration;
pub mod corpus;
pub mod embed;
pub mod geometry;
pub mod lexmatch;
pub mod linalg;
pub mod stats;
pub mod syntax;
pub mod textmetrics;

pub use calibration::{CalibrationBounds, Classification, HcdRecord};
pub use corpus::{DescriptionRecord, GroupKey, KeyField, Task, TaskGroup};
pub use embed::{EmbeddingMatrix, WordVectorTable};
pub use stats::TestResult;
