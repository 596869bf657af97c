use clap::Parser;
use hetasym_cli::{run, Cli};

fn main() {
    let cli = Cli::parse();
    if let Err(e) = run(&cli) {
        eprintln!("hetasym: {e}");
        std::process::exit(e.exit_code());
    }
}
