use clap::Parser;
use std::process::ExitCode;

fn main() -> ExitCode {
    let cli = muskat_cli::Cli::parse();
    ExitCode::from(muskat_cli::run(&cli))
}
