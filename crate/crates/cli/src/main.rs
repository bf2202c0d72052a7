mod args;
mod commands;

use std::process::ExitCode;

use anyhow::Result;
use clap::Parser;
use dwm::io::PipelineConfig;
use dwm::Exec;

use args::{Cli, Command};
use commands::Ctx;

/// Exit codes: 0 success, 1 a validation failed, 2 any error.
fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    match run(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => {
            log::error!("validation failed");
            ExitCode::from(1)
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn run(cli: &Cli) -> Result<bool> {
    let mut cfg = match &cli.config {
        Some(p) => PipelineConfig::load(p)?,
        None => PipelineConfig::default(),
    };
    cli.merge_into(&mut cfg);
    cfg.validate()?;
    let threads = cfg.threads;
    let ctx = Ctx { cfg, exec: Exec::default() };
    in_pool(threads, || match &cli.command {
        Command::BuildMesh(_) => commands::build_mesh(&ctx),
        Command::Render(_) => commands::render(&ctx),
        Command::SimulatePairs(_) => commands::simulate_pairs(&ctx),
        Command::Orbit(_) => commands::orbit(&ctx),
        Command::Validate(_) => commands::validate(&ctx),
        Command::Augment(_) => commands::augment(&ctx),
    })
}

#[cfg(feature = "parallel")]
fn in_pool<T: Send>(threads: Option<usize>, f: impl FnOnce() -> Result<T> + Send) -> Result<T> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = threads {
        builder = builder.num_threads(n);
    }
    builder.build()?.install(f)
}

#[cfg(not(feature = "parallel"))]
fn in_pool<T>(_threads: Option<usize>, f: impl FnOnce() -> Result<T>) -> Result<T> {
    f()
}
