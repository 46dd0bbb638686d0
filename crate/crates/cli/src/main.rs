use clap::Parser;

use pacs_cli::{configure_threads, execute, Cli};

fn main() {
    let cli = Cli::parse();
    if let Err(e) = configure_threads().and_then(|()| execute(&cli)) {
        eprintln!("pacs {}: {e}", cli.command.name());
        std::process::exit(e.exit_code());
    }
}
