//! Command-line front end for the `qsink` solver: JSON instances in, JSON
//! results out.

pub mod commands;
pub mod io;

pub use commands::{cmd_check, cmd_gen, cmd_solve, CliError, GenOptions, Named, SolveOptions};
pub use io::{InstanceFile, ResultFile};
