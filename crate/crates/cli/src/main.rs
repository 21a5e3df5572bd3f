use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use holomimo_cli::config::ExperimentConfig;
use holomimo_cli::{presets, run, CliError};

/// Holographic MIMO experiment runner.
#[derive(Parser)]
#[command(name = "holomimo", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Override the config seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    workers: Option<usize>,
    /// Override the output directory.
    #[arg(long, global = true)]
    out_dir: Option<PathBuf>,
    /// Override the Monte Carlo budget.
    #[arg(long, global = true)]
    mc: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Run a config file, or a preset by name.
    Run { config: String },
    /// List the bundled presets, or print one as TOML.
    Presets { name: Option<String> },
    /// Check a config without running it.
    Validate { config: String },
}

fn load(arg: &str) -> Result<ExperimentConfig, CliError> {
    let path = Path::new(arg);
    if path.exists() {
        return ExperimentConfig::from_path(path);
    }
    presets::preset(arg).ok_or_else(|| {
        CliError::config(format!(
            "{arg} is neither a file nor a preset; presets: {}",
            presets::NAMES.join(", ")
        ))
    })
}

fn apply(cli: &Cli, mut c: ExperimentConfig) -> ExperimentConfig {
    if let Some(s) = cli.seed {
        c.seed = s;
    }
    if let Some(d) = &cli.out_dir {
        c.out_dir = d.clone();
    }
    if let Some(m) = cli.mc {
        c.mc = m;
    }
    c
}

fn main_inner(cli: &Cli) -> Result<(), CliError> {
    if let Some(w) = cli.workers {
        if w == 0 {
            return Err(CliError::config("--workers must be at least 1"));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(w)
            .build_global()
            .map_err(|e| CliError::config(e.to_string()))?;
    }
    match &cli.command {
        Command::Presets { name: None } => {
            for n in presets::NAMES {
                println!("{n:10} {}", presets::describe(n).unwrap_or_default());
            }
        }
        Command::Presets { name: Some(n) } => {
            let c = presets::preset(n).ok_or_else(|| {
                CliError::config(format!("unknown preset {n}; presets: {}", presets::NAMES.join(", ")))
            })?;
            print!("{}", c.to_toml());
        }
        Command::Validate { config } => {
            let c = apply(cli, load(config)?);
            let v = c.validate()?;
            println!(
                "ok: {} with {} transmit and {} receive antennas",
                c.kind,
                v.tx.count(),
                v.rx.count()
            );
        }
        Command::Run { config } => {
            let c = apply(cli, load(config)?);
            let report = run(&c)?;
            for w in &report.warnings {
                eprintln!("warning: {w}");
            }
            for f in &report.files {
                println!("{}", c.out_dir.join(&f.name).display());
            }
            println!("{}", c.out_dir.join("manifest.json").display());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match main_inner(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
