//! File formats, verification suites and command implementations for the
//! `fracvar` binary. The numerics live in `fracvar-core`.

pub mod commands;
pub mod error;
pub mod io;
pub mod spec;
pub mod verify;

pub use error::{CliError, CliResult};
