use clap::Parser;
use hajlasz_lab::{run, Cli, EXIT_INPUT};

fn main() {
    let cli = Cli::parse();
    let code = match run(&cli) {
        Ok(verdict) => verdict.exit_code(),
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_INPUT
        }
    };
    std::process::exit(code);
}
