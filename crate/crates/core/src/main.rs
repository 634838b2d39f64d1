use std::process::ExitCode;

use clap::Parser;
use funnel::cli::{self, Cli, EXIT_FAILURE};

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            let code = if err.use_stderr() { EXIT_FAILURE } else { 0 };
            let _ = err.print();
            return ExitCode::from(code);
        }
    };
    match cli::run(&cli) {
        Ok(code) => ExitCode::from(code),
        Err(err) => {
            eprintln!("{}", cli::error_line(&err));
            ExitCode::from(EXIT_FAILURE)
        }
    }
}
