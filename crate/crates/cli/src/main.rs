use std::process::ExitCode;

use clap::Parser;
use moran_cli::{run, Cli};

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (kind, args) = cli.command.parts();
    match run(kind, args) {
        Ok(report) => {
            println!("{}", report.display());
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("moran: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
