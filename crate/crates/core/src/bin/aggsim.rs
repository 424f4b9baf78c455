use std::io::{self, Write};
use std::process::ExitCode;

use aggsim::cli::{run_cli, Cli};
use clap::Parser;

fn main() -> ExitCode {
    let cli = Cli::parse();
    let stdout = io::stdout();
    let mut out = stdout.lock();
    match run_cli(&cli, &mut out) {
        Ok(()) => {
            let _ = out.flush();
            ExitCode::SUCCESS
        }
        Err(e) => {
            let _ = out.flush();
            eprintln!("aggsim: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
