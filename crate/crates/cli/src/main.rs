use std::process::ExitCode;

use clap::Parser;
use lbtrunc_cli::{error::exit_code, run, Cli};

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = run(&cli);
    if let Err(e) = &result {
        eprintln!("error: {e}");
    }
    exit_code(&result)
}
