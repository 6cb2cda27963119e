//! Hosted runner for the quantum accelerator mode toolkit.
//!
//! Adds to [`qam_core`] a `rustfft` spectral backend, thread-parallel ensemble
//! evolution with a deterministic reduction, JSON run configurations, CSV/JSON
//! artifacts and the pipelines behind the `qam` command line.

pub mod artifacts;
pub mod backend;
pub mod config;
pub mod error;
pub mod parallel;
pub mod run;

pub use config::{Mode, RunConfig};
pub use error::RunError;
