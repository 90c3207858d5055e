//! Calibration of an unknown concentration from a straight-line fit of
//! instrument response against prepared standards.
//!
//! Two estimators are provided:
//!
//! * [`usual`]: the classical closed-form calibration model in which the
//!   standard concentrations are taken as exact.
//! * [`hetero`]: the controlled-variable model, where each standard was
//!   prepared aiming at a fixed value `X_i` and landed at an unobserved
//!   `x_i = X_i - delta_i` with a known, standard-specific variance.
//!
//! [`montecarlo`] drives repeated simulation of both estimators to measure
//! bias, mean squared error, and interval coverage.
//!
//! All estimation code is generic over the floating point type through
//! [`Scalar`]. The aliases below fix the common `f64` instantiation.

// `!(a > b)` comparisons are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod data;
pub mod error;
pub mod hetero;
pub mod montecarlo;
pub mod optimize;
pub mod scalar;
pub mod usual;

pub use data::{means, validate, FirstStageData, FitResult, Means, SecondStageData, Theta};
pub use error::{Error, Result};
pub use hetero::{fit_hetero, FitOptions, Gamma};
pub use montecarlo::{run_scenario, ModelSummary, ScenarioConfig, ScenarioSummary};
pub use scalar::Scalar;
pub use usual::{confidence_interval, fit_usual, variance_usual};

/// Factor applied to the standard deviation of `X0` to report the
/// expanded uncertainty.
pub const EXPANSION_FACTOR: f64 = 1.96;

pub type FirstStage = FirstStageData<f64>;
pub type SecondStage = SecondStageData<f64>;
pub type Params = Theta<f64>;
pub type Fit = FitResult<f64>;
pub type Options = FitOptions<f64>;

pub type FirstStage32 = FirstStageData<f32>;
pub type SecondStage32 = SecondStageData<f32>;
pub type Params32 = Theta<f32>;
pub type Fit32 = FitResult<f32>;
