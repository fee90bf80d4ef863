//! Library surface of the `qcrb` experiment runner, exposed so integration
//! tests can drive the runners without spawning processes.

pub mod config;
pub mod error;
pub mod experiments;
pub mod output;

pub use error::{CliError, CliResult};
