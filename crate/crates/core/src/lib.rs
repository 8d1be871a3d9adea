//! Scalar-on-function regression for panels with functional weather
//! covariates.

pub mod bands;
pub mod basis;
pub mod config;
pub mod effects;
pub mod error;
pub mod estimator;
pub mod fdata;
pub mod fpca;
pub mod ingest;
pub mod panel;
pub mod pipeline;
pub mod quadrature;

pub use error::{Error, ErrorClass, Result};
