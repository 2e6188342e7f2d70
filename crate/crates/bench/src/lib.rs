//! Benchmarks, experiment runner and trace output for the `done` command.
//!
//! Benchmarks and theory suites live in name-keyed registries so the command
//! line can select them at runtime.

pub mod benchmark;
pub mod config;
pub mod error;
pub mod experiment;
pub mod noise;
pub mod studies;
pub mod trace;

pub use benchmark::{Benchmark, BenchmarkRegistry};
pub use config::ExperimentConfig;
pub use error::BenchError;
pub use experiment::{run_experiment, write_outputs, ExperimentSummary};
