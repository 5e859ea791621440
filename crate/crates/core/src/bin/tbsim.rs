use clap::Parser;
use twinbeam::cli::{run_cli, Cli};

fn main() {
    std::process::exit(run_cli(Cli::parse()));
}
