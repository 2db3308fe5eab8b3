//! Select small, representative environment subsets from a multi-environment
//! benchmark.
//!
//! Raw per-environment scores are normalized against random/human reference
//! scores, compressed with `log10(1 + max(0, x))`, and every subset of a given
//! size is scored by k-fold cross-validated least squares against a summary
//! target (by default the median normalized score). The winning linear models
//! can then be applied to new raw scores to estimate the summary, or to
//! estimate every other environment's score.
//!
//! Module map:
//!
//! * [`score_table`]: CSV ingestion, normalization, filtering, targets.
//! * [`linreg`]: small dense least squares, NNLS, R², cross-validated MSE.
//! * [`subset_search`]: exhaustive parallel subset enumeration and the nested
//!   selection pipeline.
//! * [`predictor`]: end-to-end prediction and error metrics.
//! * [`structure_analysis`]: single-environment ranking, correlation
//!   structure, fairness audit, DOT export.
//! * [`fixtures`]: shipped reference data (normalization constants, published
//!   coefficient tables, reference subsets).

pub mod error;
pub mod fixtures;
pub mod linreg;
pub mod manifest;
pub mod names;
pub mod predictor;
pub mod score_table;
pub mod structure_analysis;
pub mod subset_search;
pub mod synthetic;

pub use error::{Error, Result};
pub use linreg::{Design, FitStats, LinearModel};
pub use score_table::{NormalizationTable, PreparedDataset, RawScoreTable, TargetStat};
