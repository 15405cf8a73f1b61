use clap::Parser;

fn main() {
    let cli = probound_cli::Cli::parse();
    std::process::exit(probound_cli::run(cli));
}
