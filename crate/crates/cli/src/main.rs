use std::io::{self, Write};
use std::process::ExitCode;

use ccal_cli::{cmd_fit, cmd_simulate, Cli, Command};
use clap::Parser;

fn main() -> ExitCode {
    let cli = Cli::parse();
    let mut stdout = io::stdout().lock();
    let result = match &cli.command {
        Command::Fit(args) => cmd_fit(args, &mut stdout),
        Command::Simulate(args) => cmd_simulate(args, &mut stdout),
    };
    let _ = stdout.flush();
    match result {
        Ok(class) => ExitCode::from(class.code()),
        Err(e) => {
            eprintln!("ccal: {e}");
            ExitCode::from(e.exit_class().code())
        }
    }
}
