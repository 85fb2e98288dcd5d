//! Short-term load forecasting with multi-source candidate features.
//!
//! The pipeline: build an aspect-tagged candidate matrix (geographical,
//! astronomical, social and historical-load columns), select dominant
//! features with the LV-KB procedure, train SVR / GBRT / MLP regressors,
//! evaluate them, and explain the fitted models with partial dependence.

pub mod astro;
pub mod cli;
pub mod error;
pub mod evaluation;
pub mod features;
pub mod ingest;
pub mod interpret;
pub mod models;
pub mod selection;
pub mod synth;
pub mod timeseries;

pub use error::{Error, Result};
