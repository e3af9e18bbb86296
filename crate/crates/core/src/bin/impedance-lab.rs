//! Command-line entry point; see [`impedance_lab::cli`].

use clap::Parser;

fn main() {
    let cli = impedance_lab::cli::Cli::parse();
    std::process::exit(impedance_lab::cli::run(cli));
}
