use std::io::Write;
use std::process::ExitCode;

use clap::Parser;
use geordd_cli::{error_json, exit_code, run, Cli};
use serde_json::json;

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) if !e.use_stderr() => {
            // --help and --version
            print!("{e}");
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let record = json!({
                "error": { "code": "usage", "message": e.to_string().trim(), "exit_code": 1 }
            });
            eprintln!("{record}");
            return ExitCode::from(1);
        }
    };
    match run(cli) {
        Ok(out) => {
            // A closed pipe downstream is not our failure.
            let _ = writeln!(std::io::stdout().lock(), "{}", out.stdout);
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("{}", error_json(&e));
            ExitCode::from(exit_code(&e) as u8)
        }
    }
}
