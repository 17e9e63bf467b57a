use clap::Parser;
use std::process::ExitCode;
use stochlag_cli::{bench, run, Cli, Command};

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Bench(a) => bench(&a),
        other => run(Cli { command: other }).map(|s| (s, 0)),
    };
    match result {
        Ok((text, code)) => {
            print!("{text}");
            ExitCode::from(code as u8)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
