use std::process::ExitCode;

use clap::Parser;
use qel::cli::{execute, Args, ErrorRecord};

fn main() -> ExitCode {
    let args = match Args::try_parse() {
        Ok(a) => a,
        Err(e) if !e.use_stderr() => {
            // --help and --version
            print!("{e}");
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let record = ErrorRecord { error: "usage".into(), message: e.to_string().trim().to_owned() };
            eprintln!("{}", serde_json::to_string(&record).expect("error record serializes"));
            return ExitCode::from(2);
        }
    };
    match execute(&args) {
        Ok(summary) => {
            println!("{}", serde_json::to_string_pretty(&summary).expect("summary serializes"));
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("{}", serde_json::to_string(&ErrorRecord::from(&e)).expect("error record serializes"));
            ExitCode::FAILURE
        }
    }
}
