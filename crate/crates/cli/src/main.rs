mod commands;
mod config;
mod output;
mod svg;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use commands::{CliError, Command, Run};

#[derive(Parser)]
#[command(name = "multibeta", version, about = "Multiscale affine-approximation coefficients and packing sums")]
struct Cli {
    #[command(subcommand)]
    command: Sub,
    /// JSON configuration file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Override the configured seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory (default: the configured `out`, else `./out`).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true)]
    quiet: bool,
}

#[derive(Subcommand, Clone, Copy)]
enum Sub {
    /// Cube coefficients over the dyadic tree.
    Analyze,
    /// Packing sums per selector.
    Carleson,
    /// Integral-geometric coefficient of the configured box.
    Igbeta,
    /// Affine reconstruction from transversal planes.
    Reconstruct,
    /// Parabolic coefficient tables and packing sums.
    Parabolic,
    /// Differentiability probe.
    Rademacher,
    /// Full property suite.
    Verify,
}

impl From<Sub> for Command {
    fn from(s: Sub) -> Self {
        match s {
            Sub::Analyze => Command::Analyze,
            Sub::Carleson => Command::Carleson,
            Sub::Igbeta => Command::Igbeta,
            Sub::Reconstruct => Command::Reconstruct,
            Sub::Parabolic => Command::Parabolic,
            Sub::Rademacher => Command::Rademacher,
            Sub::Verify => Command::Verify,
        }
    }
}

fn run(cli: &Cli) -> Result<PathBuf, CliError> {
    let path = cli
        .config
        .as_ref()
        .ok_or_else(|| config::ConfigError { line: None, msg: "--config PATH is required".into() })?;
    let text = std::fs::read_to_string(path)
        .map_err(|e| config::ConfigError { line: None, msg: format!("cannot read {}: {e}", path.display()) })?;
    let base = path.parent().map(PathBuf::from).unwrap_or_default();
    let loaded = config::load(&text, &base, cli.seed)?;
    let out = cli.out.clone().or_else(|| loaded.config.out.clone()).unwrap_or_else(|| PathBuf::from("out"));
    Run { loaded: &loaded, out, quiet: cli.quiet }.execute(cli.command.into())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(manifest) => {
            if !cli.quiet {
                println!("manifest: {}", manifest.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("{e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
