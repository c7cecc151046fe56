//! File formats, configuration, experiment sweeps and the `gbnlearn`
//! command-line tool built on [`gbn_core`].

pub mod commands;
pub mod config;
pub mod error;
pub mod formats;
pub mod sweep;

pub use error::{CliError, Result};
