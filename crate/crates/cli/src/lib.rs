//! Configuration, study runners and artifact writers behind the `fluxlab` binary.

pub mod config;
pub mod error;
pub mod output;
pub mod run;
pub mod svg;

pub use config::{parse_config, Command, Parameters, RunConfig};
pub use error::{CliError, Result};
