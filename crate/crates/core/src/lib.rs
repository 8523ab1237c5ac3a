//! Sparse classification with stability-aware hyperparameter tuning.
//!
//! The crate fits L0-constrained (best-subset) logistic regression models
//! and tunes their hyperparameters over two criteria at once: predictive
//! accuracy and the stability of the selected feature sets across
//! cross-validation folds. On data with highly correlated features the
//! plain stability measure punishes swapping a feature for a near-copy;
//! the adjusted measure provided here does not, which is the point of the
//! whole exercise.
//!
//! Modules:
//! - [`stability`]: unadjusted and similarity-adjusted stability measures
//! - [`l0logreg`]: best-subset logistic regression solver
//! - [`simdata`]: block-correlated benchmark data generator
//! - [`tuning`]: cross-validated grid tuning and multi-criteria selection
//! - [`stabsel`]: stability selection baseline
//! - [`eval`]: simulation experiments and nested cross-validation
//! - [`cli`]: command-line entry points

pub mod cli;
pub mod data;
pub mod error;
pub mod eval;
pub mod l0logreg;
pub mod rng;
pub mod simdata;
pub mod stability;
pub mod stabsel;
pub mod tuning;

pub use data::{Dataset, FeatureSet};
pub use error::{Error, Result};
