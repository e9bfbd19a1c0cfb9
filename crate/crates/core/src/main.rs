use clap::Parser;
use toeplitz_core::cli::{execute, Cli, ExperimentConfig};

fn main() {
    let cli = Cli::parse();
    let cfg = ExperimentConfig::from_command(cli.command);
    std::process::exit(execute(&cfg));
}
