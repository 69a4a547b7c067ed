//! Survival-analysis explanations for binary classifier scores.
//!
//! The classifier's score is treated as the index of a stochastic process
//! over which true responders are "included". On top of that view the
//! crate estimates the inclusion (survival) curve and cumulative hazard
//! nonparametrically, attributes response risk to input features with a
//! multiplicative (proportional-hazards) model, and produces
//! score-dependent coefficient curves with an additive hazards model.
//!
//! Modules follow the pipeline order:
//!
//! - [`dataset`]: ingestion, episode policy, risk tables, and the drive
//!   snapshot adapter.
//! - [`estimators`]: product-limit inclusion curve and Nelson-Aalen
//!   cumulative hazard with variances and confidence bounds.
//! - [`coxph`]: Breslow partial likelihood, Newton-Raphson fitting, Wald
//!   statistics, collinearity filtering, stepwise selection, baseline
//!   hazard.
//! - [`aalen`]: additive hazards model with cumulative coefficient curves.
//! - [`synthgen`]: seeded synthetic data with known hazards plus an
//!   independent grid maximizer for validation.
//! - [`pipeline`]: the end-to-end orchestration behind the CLI, artifact
//!   serialization, and the run manifest.

pub mod aalen;
pub mod coxph;
pub mod dataset;
pub mod error;
pub mod estimators;
pub mod pipeline;
pub mod plot;
pub mod synthgen;

pub use error::{Error, Result};
