mod args;
mod commands;
mod error;
mod output;

use std::process::ExitCode;
use std::time::Instant;

use clap::Parser;

use args::Cli;
use error::CliError;
use output::{write_manifest, write_product, RunManifest, SCHEMA_VERSION};

fn configure_threads() -> Result<(), CliError> {
    let Ok(raw) = std::env::var("ASEP_THREADS") else {
        return Ok(());
    };
    let threads: usize = raw.trim().parse().ok().filter(|&t| t > 0).ok_or_else(|| {
        CliError::Usage(format!(
            "ASEP_THREADS must be a positive integer, got {raw:?}"
        ))
    })?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .map_err(|e| CliError::Usage(format!("cannot size the thread pool: {e}")))
}

fn run(cli: &Cli) -> Result<bool, CliError> {
    configure_threads()?;
    let started = Instant::now();
    let outcome = commands::execute(&cli.command, &cli.out)?;
    for (product, target) in &outcome.products {
        write_product(product, target)?;
    }
    log::info!(
        "{} finished in {:.3} s",
        cli.command.name(),
        started.elapsed().as_secs_f64()
    );
    if let Some(path) = &cli.manifest {
        let manifest = RunManifest {
            schema_version: SCHEMA_VERSION,
            command: cli.command.name().to_string(),
            argv: std::env::args().collect(),
            parameters: serde_json::to_value(&cli.command)?,
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            seeds: outcome.seeds.clone(),
            wall_time_seconds: started.elapsed().as_secs_f64(),
            outputs: outcome.products.iter().map(|(_, t)| t.clone()).collect(),
        };
        write_manifest(&manifest, path)?;
    }
    Ok(outcome.passed)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("{}", e.to_json());
            ExitCode::from(e.exit_code())
        }
    }
}
