//! Command-line front end for planning, compensating and simulating drone shows.

pub mod artifact;
pub mod commands;
pub mod error;
pub mod lock;
pub mod scenario;
pub mod schema;

pub use error::{CliError, CliResult};
