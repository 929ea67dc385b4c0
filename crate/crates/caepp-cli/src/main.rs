use std::io::Write;
use std::process::ExitCode;

use clap::Parser;

use caepp_cli::{run, Cli, CliError};

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = run(&cli).and_then(|(text, code)| {
        match &cli.out {
            Some(path) => std::fs::write(path, &text).map_err(|source| CliError::Io { path: path.clone(), source })?,
            None => std::io::stdout().write_all(text.as_bytes()).map_err(|source| CliError::Io {
                path: "<stdout>".into(),
                source,
            })?,
        }
        Ok(code)
    });
    match result {
        Ok(0) => ExitCode::SUCCESS,
        Ok(code) => {
            eprintln!("caepp: closed forms disagree with the oracle");
            ExitCode::from(code)
        }
        Err(e) => {
            eprintln!("caepp: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
