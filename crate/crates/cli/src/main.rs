use clap::Parser;

fn main() {
    let cli = ident_cli::Cli::parse();
    std::process::exit(ident_cli::run(cli));
}
