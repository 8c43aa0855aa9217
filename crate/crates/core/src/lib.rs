//! Peak-shift difficulty ranking from acceptance-count tables.
//!
//! Organizations (high schools) publish how many of their members passed each
//! examination (university entrance exam) but not who failed or who skipped.
//! Because examinees skip exams far from their own level, each school's
//! acceptance counts peak at the exam difficulty matching the school's level.
//! This crate ranks the exams by difficulty from those counts alone:
//!
//! * [`dataset`] — the acceptance-count data model and its validation,
//! * [`standardize`] — the rate normalization feeding the estimator,
//! * [`xmeans`] — BIC-driven k-means used to group unranked exams,
//! * [`estimator`] — the iterative ranking loop and run aggregation,
//! * [`simulator`] — a synthetic admissions generator with known truth,
//! * [`metrics`] — rank-correlation and accuracy measures,
//! * [`experiments`] — robustness sweeps, ablations, and batch studies,
//! * [`cocluster`] — co-clustering network and community detection,
//! * [`io`] — CSV schemas and run manifests,
//! * [`cli`] — the `peakshift` command-line surface.

pub mod cli;
pub mod cocluster;
pub mod dataset;
mod error;
pub mod estimator;
pub mod experiments;
mod grid;
pub mod io;
pub mod metrics;
pub mod seeding;
pub mod simulator;
pub mod standardize;
pub mod xmeans;

pub use error::{Error, Result};
pub use grid::Grid;
