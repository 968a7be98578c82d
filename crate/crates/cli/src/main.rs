use std::process::ExitCode;

use clap::Parser;

fn main() -> ExitCode {
    facedepth_cli::run(facedepth_cli::Cli::parse())
}
