mod args;
mod commands;
mod output;

use std::process::ExitCode;

use clap::Parser;

use args::{Cli, Command};

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Train(a) => commands::train(&cli, a),
        Command::Oracle(a) => commands::oracle(&cli, a),
        Command::Reproduce(a) => commands::reproduce(&cli, a),
        Command::Certify(a) => commands::certify(&cli, a),
    };
    match result {
        Ok(outcome) => {
            for path in &outcome.written {
                println!("{}", path.display());
            }
            if outcome.all_passed {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(output::EXIT_NUMERICAL)
            }
        }
        Err(err) => {
            let (code, body) = output::error_report(&err);
            eprintln!("{body}");
            ExitCode::from(code)
        }
    }
}
