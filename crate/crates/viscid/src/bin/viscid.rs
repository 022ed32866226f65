use clap::Parser;
use viscid::cli::{cli_main, CliArgs};

fn main() {
    std::process::exit(cli_main(CliArgs::parse()));
}
