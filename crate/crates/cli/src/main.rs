mod args;
mod commands;
mod error;

use clap::Parser;

use args::{Cli, Command};

fn main() {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Svm(a) => commands::svm(a),
        Command::Cs1bit(a) => commands::cs1bit(a),
        Command::Verify(a) => commands::verify(a),
        Command::Gen(a) => commands::gen(a),
        Command::Bench(a) => commands::bench(a),
    };
    if let Err(e) = result {
        eprintln!("error: {e}");
        std::process::exit(e.exit_code());
    }
}
