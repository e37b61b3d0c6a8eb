use clap::Parser;

fn main() {
    std::process::exit(ssiv::run(ssiv::Cli::parse()));
}
