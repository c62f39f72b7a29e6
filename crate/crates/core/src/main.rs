use clap::Parser;

fn main() {
    let cli = qctl::cli::Cli::parse();
    std::process::exit(qctl::cli::main_with(cli));
}
