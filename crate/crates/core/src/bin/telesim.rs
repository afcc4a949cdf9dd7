use std::process::ExitCode;

use clap::Parser;
use telesim::cli::{execute, Cli};

fn main() -> ExitCode {
    env_logger::init();
    let cli = Cli::parse();
    let code = execute(cli, &mut std::io::stdout(), &mut std::io::stderr());
    ExitCode::from(code)
}
