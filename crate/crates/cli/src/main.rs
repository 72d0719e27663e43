use std::process::ExitCode;

use catgini_cli::{run_to, Cli};
use clap::Parser;

fn main() -> ExitCode {
    let cli = Cli::parse();
    ExitCode::from(run_to(
        &cli,
        std::io::stdout().lock(),
        std::io::stderr().lock(),
    ))
}
