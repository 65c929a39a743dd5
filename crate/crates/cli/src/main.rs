mod args;
mod commands;
mod config;
mod error;
mod svg;
#[cfg(test)]
mod tests;

use std::ffi::OsString;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::Parser;

use crate::args::Cli;
use crate::error::CliError;

fn parse(argv: Vec<OsString>) -> Result<Cli, CliError> {
    let argv = match config::config_path(&argv) {
        Some(path) => config::merge(argv, &PathBuf::from(path))?,
        None => argv,
    };
    Cli::try_parse_from(argv).map_err(|e| match e.kind() {
        ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
            let _ = e.print();
            std::process::exit(0);
        }
        _ => CliError::Usage(e.render().to_string().trim_end().to_string()),
    })
}

fn main() -> ExitCode {
    let result = parse(std::env::args_os().collect()).and_then(|cli| commands::run(&cli));
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e.to_string().trim_start_matches("error: "));
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
