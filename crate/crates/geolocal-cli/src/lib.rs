//! Seeded batch experiments over the geolocal toolkit. Every command writes one
//! JSON document holding its resolved config, the config's content hash, an
//! outcome and a command-specific result.

pub mod cli;
pub mod commands;
pub mod config;

pub use cli::run_cli;
pub use config::{CliError, Outcome, Run, SCHEMA_VERSION, SEED_ENV};
