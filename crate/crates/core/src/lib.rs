//! Accuracy prediction for candidate CNN architectures from tabular features.
//!
//! This crate holds the allocation-only, IO-free core:
//!
//! - [`scheme`]: layer-list schemes and the eight tabular scheme features,
//! - [`dataset`]: records, feature matrices, accuracy bins and the four
//!   train/test splits (uniform plus three extrapolation splits),
//! - [`metrics`]: MAE, pairwise monotonicity violations and the subset
//!   search cost functions,
//! - [`regressors`]: k-NN, least squares with target activations, CART,
//!   random forest, gradient boosting and AdaBoost.R2,
//! - [`featsel`]: budgeted best-first hill climbing over feature subsets,
//!   with an exhaustive oracle and importance statistics.
//!
//! File formats, the report harness and the command-line front-end live in
//! the `naap` crate.
#![no_std]
#![warn(rust_2018_idioms, unused_qualifications, missing_debug_implementations)]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod dataset;
pub mod featsel;
pub mod matrix;
pub mod metrics;
pub mod regressors;
pub mod scheme;

mod math;

pub use dataset::{ArchRecord, Dataset, EpochMetrics, Split, SplitKind};
pub use featsel::{FeatureMask, SearchConfig, SearchTrace};
pub use matrix::Matrix;
pub use metrics::{CostFunction, EvalResult};
pub use regressors::{Activation, Family, FittedModel, RegressorSpec};
pub use scheme::{ArchitectureScheme, LayerSpec, SchemeFeatures};
