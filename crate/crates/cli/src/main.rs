use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use iterfe_cli::{run, Command, Overrides, RunConfig};

/// Solve φ = Tφ + g for a weighted system of maps of [0, 1].
#[derive(Debug, Parser)]
#[command(name = "iterfe", version)]
struct Args {
    /// Equation spec (JSON).
    #[arg(long)]
    spec: PathBuf,
    /// Output directory for report.json and results.csv.
    #[arg(long, default_value = "out")]
    out: PathBuf,
    #[arg(long, value_enum, default_value = "solve")]
    command: Command,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    grid_m: Option<usize>,
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long)]
    mc_samples: Option<usize>,
    #[arg(long)]
    max_undecided: Option<f64>,
    /// Worker threads; all cores when absent.
    #[arg(long)]
    workers: Option<usize>,
}

fn main() -> ExitCode {
    let args = Args::parse();
    let cfg = RunConfig {
        command: args.command,
        spec_path: args.spec,
        out_dir: args.out,
        overrides: Overrides {
            seed: args.seed,
            grid_m: args.grid_m,
            tol: args.tol,
            mc_samples: args.mc_samples,
            max_undecided: args.max_undecided,
        },
        workers: args.workers,
    };
    ExitCode::from(run(&cfg) as u8)
}
