use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use conerepair::RepairSettings;
use conerepair_cli::commands::{self, RepairOptions};
use conerepair_cli::format::{read_problem, serialize, write_problem};
use conerepair_cli::generate::{self, SpacecraftData};
use conerepair_cli::CliError;

#[derive(Parser)]
#[command(name = "conerepair", version, about = "Find nearby parameters that make a cone program solvable")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Report t*(θ₀) and whether the program is solvable.
    Diagnose {
        file: PathBuf,
        #[arg(long, default_value_t = 1e-5)]
        eps_out: f64,
        /// Write the report as JSON.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Search for solvable parameters close to θ₀.
    Repair(RepairArgs),
    /// Write one of the built-in example problems.
    Generate {
        #[arg(value_enum)]
        example: Example,
        /// Output path; standard output if omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Example {
    Spacecraft,
    Arbitrage,
}

#[derive(Args)]
struct RepairArgs {
    file: PathBuf,
    #[arg(long, default_value_t = 1.0)]
    lambda0: f64,
    #[arg(long, default_value_t = 1.0)]
    alpha0: f64,
    #[arg(long, default_value_t = 500)]
    max_iters: usize,
    #[arg(long, default_value_t = 1e-6)]
    eps_in: f64,
    #[arg(long, default_value_t = 1e-5)]
    eps_out: f64,
    /// Start from θ₀ perturbed by seeded noise of relative size 1e-6.
    #[arg(long)]
    seed: Option<u64>,
    /// Solve the convex reformulation (requires A independent of θ).
    #[arg(long)]
    exact: bool,
    /// Interior margin for second-order blocks in the convex reformulation.
    #[arg(long, default_value_t = 0.0)]
    eps_interior: f64,
    /// Write the full report as JSON.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Print every iteration.
    #[arg(long)]
    trace: bool,
}

fn write_json<T: serde::Serialize>(path: &PathBuf, value: &T) -> Result<(), CliError> {
    let text = serde_json::to_string_pretty(value).map_err(|e| CliError::Input(e.to_string()))?;
    std::fs::write(path, text + "\n").map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
}

fn run(cli: Cli) -> Result<i32, CliError> {
    let solver = commands::default_solver();
    match cli.command {
        Command::Diagnose { file, eps_out, out } => {
            let settings = RepairSettings {
                eps_out,
                ..Default::default()
            };
            settings.validate()?;
            let (problem, bytes) = read_problem(&file)?;
            let report = commands::diagnose(&solver, &problem, &bytes, &settings)?;
            print!("{}", report.to_text());
            if let Some(path) = out {
                write_json(&path, &report)?;
            }
            Ok(report.exit_code())
        }
        Command::Repair(args) => {
            let settings = RepairSettings {
                lambda0: args.lambda0,
                alpha0: args.alpha0,
                n_iter: args.max_iters,
                eps_in: args.eps_in,
                eps_out: args.eps_out,
                ..Default::default()
            };
            settings.validate()?;
            let (problem, bytes) = read_problem(&args.file)?;
            let opts = RepairOptions {
                seed: args.seed,
                exact: args.exact.then_some(args.eps_interior),
            };
            let report = commands::run_repair(&solver, &problem, &bytes, &settings, &opts)?;
            print!("{}", report.to_text(args.trace));
            if let Some(path) = args.out {
                write_json(&path, &report)?;
            }
            Ok(report.exit_code())
        }
        Command::Generate { example, out } => {
            let problem = match example {
                Example::Spacecraft => generate::spacecraft(&SpacecraftData::default())?,
                Example::Arbitrage => generate::arbitrage(&generate::horse_race_returns())?,
            };
            match out {
                Some(path) => write_problem(&path, &problem)?,
                None => print!("{}", serialize(&problem)),
            }
            Ok(commands::EXIT_OK)
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
