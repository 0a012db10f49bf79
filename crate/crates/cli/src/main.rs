mod cli;
mod commands;

use std::process::ExitCode;

use clap::Parser;

use cli::{Cli, Command};

/// Input or numerical failure.
const EXIT_ERROR: u8 = 2;

fn main() -> ExitCode {
    let args = Cli::parse();
    let result = match &args.command {
        Command::Vvix(a) => commands::cmd_vvix(a),
        Command::Table1(a) => commands::cmd_table1(a),
        Command::PdeTable(a) => commands::cmd_pde_table(a),
        Command::Sweep(a) => commands::cmd_sweep(a),
        Command::Calibrate(a) => commands::cmd_calibrate(a),
        Command::Quotes(a) => commands::cmd_quotes(a),
        Command::McCheck(a) => commands::cmd_mc_check(a),
    };
    match result {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(EXIT_ERROR)
        }
    }
}
