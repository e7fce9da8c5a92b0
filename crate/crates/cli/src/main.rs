use std::process::ExitCode;

use clap::Parser;

fn main() -> ExitCode {
    let cli = seafield_cli::Cli::parse();
    match seafield_cli::run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(seafield_cli::exit_code(&e))
        }
    }
}
