use std::io::Write;
use std::process::ExitCode;

use clap::Parser;
use crn_cli::{exit, run, RunConfig};

fn main() -> ExitCode {
    let cfg = match RunConfig::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { exit::USAGE as u8 } else { 0 });
        }
    };
    match run(&cfg) {
        Ok(out) => {
            let _ = std::io::stdout().write_all(out.stdout.as_bytes());
            ExitCode::from(out.code as u8)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
