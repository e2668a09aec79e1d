use clap::Parser;
use typical_cli::{run, Cli};

fn main() {
    // clap exits with 2 on usage errors by itself
    let cli = Cli::parse();
    if let Err(e) = run(cli) {
        eprintln!("error: {e}");
        std::process::exit(e.exit_code());
    }
}
