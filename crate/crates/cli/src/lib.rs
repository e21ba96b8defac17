//! Command-line front end: configuration, parameter sweeps and
//! CSV/SVG output.

pub mod app;
pub mod commands;
pub mod config;
pub mod error;
pub mod svg;
pub mod table;

pub use app::run_cli;
pub use config::{Command, Config, Overrides};
pub use error::CliError;
