use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use permlaw_cli::{run, write_outputs, CliError, Command, ExperimentConfig};

/// Permanent and scaling-mean experiments.
#[derive(Parser, Debug)]
#[command(name = "permlaw", version)]
struct Cli {
    command: Command,
    /// TOML experiment config.
    #[arg(long)]
    config: PathBuf,
    /// Output directory; overrides `output_dir` from the config.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Omit the timestamp comment line from results.csv.
    #[arg(long)]
    no_timestamp: bool,
}

fn execute(cli: Cli) -> Result<PathBuf, CliError> {
    let mut config = ExperimentConfig::load(&cli.config)?;
    match config.command {
        Some(c) if c != cli.command => {
            return Err(CliError::Config(format!(
                "command: config says {c} but {} was requested",
                cli.command
            )))
        }
        _ => config.command = Some(cli.command),
    }
    let dir = cli
        .out
        .or_else(|| config.output_dir.clone())
        .unwrap_or_else(|| PathBuf::from(format!("permlaw-{}", cli.command)));
    let out = run(&config)?;
    write_outputs(&out, &dir, !cli.no_timestamp)?;
    Ok(dir)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match execute(cli) {
        Ok(dir) => {
            println!("wrote {}", dir.display());
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("permlaw: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
