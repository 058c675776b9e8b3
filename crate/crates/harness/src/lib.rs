//! Experiment configuration, seeded heterogeneity fields, the time-scheme and
//! solver studies, and result emission for the `unsat-poro` command.

pub mod config;
pub mod fields;
pub mod output;
pub mod study;

pub use config::ExperimentConfig;
pub use study::{ResultRow, SolverStudy, TimeStudy};
