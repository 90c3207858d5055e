//! File formats, reports and subcommands of the `ccal` tool.

pub mod commands;
pub mod error;
pub mod io;
pub mod report;
pub mod scenario;

pub use commands::{cmd_fit, cmd_simulate, Cli, Command, FitArgs, ModelChoice, OutputFormat, SimulateArgs};
pub use error::{CliError, ExitClass};
