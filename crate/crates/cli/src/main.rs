use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use semidiscrete_cli::commands::{out_dir_or_default, summarize_census, summarize_convergence};
use semidiscrete_cli::{
    cmd_convergence, cmd_negativity, cmd_single_path, cmd_validate, parse_config, CliError,
    RunContext,
};

#[derive(Parser)]
#[command(
    name = "semidiscrete",
    version,
    about = "Semi-discrete SDE integrators: convergence and positivity experiments"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args)]
struct Common {
    #[arg(long)]
    config: PathBuf,
    /// Overrides the config seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory (default: ./out).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads; results do not depend on it.
    #[arg(long)]
    workers: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Endpoint errors, confidence intervals and order fits.
    Convergence(Common),
    /// How often, and when, a scheme first goes negative.
    Negativity(Common),
    /// Trajectories of several schemes on one Brownian path.
    SinglePath(Common),
    /// Check the parameter conditions of the configured model.
    Validate(Common),
}

fn run(cli: Cli) -> Result<(), CliError> {
    let (name, common) = match &cli.command {
        Command::Convergence(c) => ("convergence", c),
        Command::Negativity(c) => ("negativity", c),
        Command::SinglePath(c) => ("single-path", c),
        Command::Validate(c) => ("validate", c),
    };
    if common.workers == Some(0) {
        return Err(CliError::Usage("--workers must be at least 1".into()));
    }
    let mut cfg = parse_config(&common.config)?;
    if let Some(seed) = common.seed {
        cfg = cfg.with_seed(seed);
    }
    for w in cfg.warnings() {
        eprintln!("warning: {w}");
    }
    let ctx = RunContext {
        out: out_dir_or_default(common.out.as_deref()),
        workers: common.workers,
        config_path: Some(common.config.clone()),
    };
    let files = match cli.command {
        Command::Convergence(_) => {
            let outcome = cmd_convergence(&cfg, &ctx)?;
            print!("{}", summarize_convergence(&outcome));
            outcome.files
        }
        Command::Negativity(_) => {
            let (census, files) = cmd_negativity(&cfg, &ctx)?;
            print!("{}", summarize_census(&census));
            files
        }
        Command::SinglePath(_) => cmd_single_path(&cfg, &ctx)?,
        Command::Validate(_) => {
            print!("{}", cmd_validate(&cfg));
            Vec::new()
        }
    };
    for f in files {
        eprintln!("{name}: wrote {}", f.display());
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                CliError::Usage(_) | CliError::Config(_) => ExitCode::from(2),
                _ => ExitCode::FAILURE,
            }
        }
    }
}
