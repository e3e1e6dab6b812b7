mod args;
mod commands;
mod error;
mod output;

use std::io::Write;
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::Parser;

use args::{Cli, Format};
use commands::Inputs;
use error::{CliError, CliResult};
use output::{to_json, Report, SCHEMA};

const THREADS_VAR: &str = "POLYPERTURB_THREADS";

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => return fail(&CliError::Usage(e.to_string().trim_end().to_string())),
    };
    match configure_threads().and_then(|()| execute(&cli)) {
        Ok(code) => ExitCode::from(code),
        Err(e) => fail(&e),
    }
}

fn fail(e: &CliError) -> ExitCode {
    eprintln!("{}", e.to_json());
    ExitCode::from(e.exit_code())
}

fn configure_threads() -> CliResult<()> {
    let Ok(value) = std::env::var(THREADS_VAR) else {
        return Ok(());
    };
    let threads: usize = value
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| CliError::Usage(format!("{THREADS_VAR} must be a positive integer, got {value:?}")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .map_err(|e| CliError::Usage(format!("cannot size the thread pool: {e}")))
}

fn execute(cli: &Cli) -> CliResult<u8> {
    let mut inputs = Inputs::default();
    let outcome = commands::run(cli, &mut inputs)?;
    let bytes = match cli.format {
        Format::Csv => outcome.table.to_csv(),
        Format::Json => {
            let config = serde_json::to_value(cli).expect("arguments serialize");
            to_json(&Report {
                schema: SCHEMA,
                command: cli.command.name(),
                inputs: &inputs.digests,
                config: &config,
                result: &outcome.result,
            })
        }
    };
    match &cli.output {
        Some(path) => std::fs::write(path, &bytes)?,
        None => std::io::stdout().lock().write_all(&bytes)?,
    }
    Ok(if outcome.inconclusive { 3 } else { 0 })
}
