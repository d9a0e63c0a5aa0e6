//! Reference computations the learners are validated against: batch
//! solutions, model-based limits, forward views and long-run averages.

pub mod batch;
pub mod forward;
pub mod model;
pub mod stats;
pub mod suite;

pub use model::{apply_t_lambda, model_quantities, ModelQuantities, ResidualLimits};
pub use suite::{run_suite, SuiteConfig, SuiteReport, Verdict};
