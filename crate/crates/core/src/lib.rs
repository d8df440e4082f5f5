//! Function-on-function regression through multivariate functional principal
//! components.
//!
//! Covariate and response curves are smoothed, standardized and reduced to
//! score vectors; a regressor (a small feed-forward network or a linear
//! baseline) maps covariate scores to response scores, and predictions are
//! mapped back to curves.
//!
//! The crate is `no_std` with `alloc` when built without the default `std`
//! feature.

#![cfg_attr(not(feature = "std"), no_std)]
// Negated comparisons are used on purpose so that NaN takes the error branch.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;

pub mod data;
pub mod error;
pub mod grid;
pub mod linalg;
pub mod fpca;
pub mod pipeline;
pub mod regression;
pub mod smoothing;
pub mod synth;

pub use data::{CurveSet, FunctionalDataset, ObservationSeries, Record, Role, Schema};
pub use error::{Error, Result};
pub use grid::{make_grid, EvalGrid, Interval};
pub use linalg::Matrix;
