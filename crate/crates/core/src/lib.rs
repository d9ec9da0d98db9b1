//! Prediction-based inference for regression with missing outcomes.

// `!(a < b)` is used on purpose so that NaN takes the failure branch.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod dgp;
pub mod dist;
pub mod error;
pub mod estimators;
pub mod frame;
pub mod gwas;
pub mod mi;
pub mod regression;
pub mod sim;

pub use error::{Error, Result};
