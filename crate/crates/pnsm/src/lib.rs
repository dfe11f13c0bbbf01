//! File formats, run manifests and the command implementations behind the
//! `pnsm` binary.

pub mod cli;
pub mod commands;
pub mod error;
pub mod table;

pub use commands::{execute, replay, Manifest};
pub use error::{CliError, Result};
