//! `dynpolar`: run the built-in examples, decompose configured motions,
//! average fiber rotation rates and verify invariants, writing CSV files.

#![allow(clippy::needless_range_loop)]

mod commands;
mod config;
mod csv;
mod error;
mod verify;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use crate::config::{read_config, ConfigFile, FieldSpec, Overrides, RunConfig};
use crate::error::CliError;
use crate::verify::Suite;

#[derive(Debug, Parser)]
#[command(name = "dynpolar", version, about = "Polar and dynamic polar decomposition along trajectories")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// JSON config file; flags override its keys.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory, created if missing.
    #[arg(long, global = true, default_value = ".")]
    out: PathBuf,
    /// Number of time steps.
    #[arg(long, global = true)]
    steps: Option<usize>,
    /// Seed for Monte Carlo quadrature and randomized checks.
    #[arg(long, global = true)]
    seed: Option<u64>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Write angles.csv and factors.csv for a preset motion.
    Example {
        #[arg(value_enum)]
        name: Example,
    },
    /// Run invariant checks and write report.csv.
    Verify {
        #[arg(value_enum, default_value = "all")]
        suite: Suite,
    },
    /// Write nu.csv: fiber-averaged angular velocity along the trajectory.
    FiberAverage,
    /// Write angles.csv and factors.csv for the configured motion.
    Decompose,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Example {
    Shear,
    Vortex,
    Shear3d,
}

impl Example {
    fn preset(self) -> FieldSpec {
        let name = match self {
            Example::Shear => "shear",
            Example::Vortex => "vortex",
            Example::Shear3d => "shear3d",
        };
        FieldSpec::preset(name).expect("preset exists")
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    let file = match &cli.config {
        Some(path) => read_config(path)?,
        None => ConfigFile::default(),
    };
    let preset = match &cli.command {
        Command::Example { name } => Some(name.preset()),
        _ => None,
    };
    let cfg = RunConfig::resolve(preset, file, Overrides { steps: cli.steps, seed: cli.seed })?;
    let resolved = cfg.build()?;
    std::fs::create_dir_all(&cli.out)?;
    match cli.command {
        Command::Example { .. } => commands::write_angles_and_factors("example", &cfg, &resolved, &cli.out),
        Command::Decompose => commands::write_angles_and_factors("decompose", &cfg, &resolved, &cli.out),
        Command::FiberAverage => {
            commands::fiber_table(&cfg, &resolved)?.write(&cli.out.join("nu.csv"))?;
            Ok(())
        }
        Command::Verify { suite } => {
            let checks = verify::run_suite(suite, &cfg, &resolved)?;
            let table = verify::report(&cfg, &checks);
            table.write(&cli.out.join("report.csv"))?;
            print!("{}", table.render());
            match checks.iter().filter(|c| !c.pass()).count() {
                0 => Ok(()),
                n => Err(CliError::Verification(n)),
            }
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("dynpolar: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
