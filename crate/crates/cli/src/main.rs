mod args;
mod commands;
mod failure;
mod output;
mod selftest;

use std::process::ExitCode;

use clap::Parser;

use args::Cli;
use failure::Failure;

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) if !e.use_stderr() => {
            // --help / --version
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => return Failure::usage(e.to_string()).report(),
    };
    match run(cli) {
        Ok(code) => code,
        Err(f) => f.report(),
    }
}

fn run(cli: Cli) -> Result<ExitCode, Failure> {
    configure_threads()?;
    let resolved = cli.resolve()?;
    let artifact = commands::dispatch(&resolved)?;
    output::write(&artifact, &resolved)?;
    Ok(if artifact.success {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(failure::EXIT_SELFTEST)
    })
}

fn configure_threads() -> Result<(), Failure> {
    let Ok(v) = std::env::var("ETA_NUM_THREADS") else {
        return Ok(());
    };
    let n: usize = v
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| Failure::config("ETA_NUM_THREADS", format!("expected a positive integer, got {v:?}")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| Failure::config("ETA_NUM_THREADS", e.to_string()))
}
