use clap::Parser;

fn main() {
    let cli = pdimtune_cli::Cli::parse();
    std::process::exit(pdimtune_cli::run(&cli));
}
