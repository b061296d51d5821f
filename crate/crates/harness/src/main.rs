use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};
use thinpore::{run, ExperimentConfig, ExperimentKind};

#[derive(Parser)]
#[command(name = "thinpore", version, about = "Thin porous layer homogenization experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Cell problems and permeability tensors.
    Cell(Common),
    /// One fine solve on the perforated layer.
    Fine(Common),
    /// Norm scaling over a list of eps for each gamma.
    Scaling(Common),
    /// Unfolding identities on random fields.
    UnfoldCheck(Common),
    /// Effective Darcy velocity table.
    Darcy(Common),
}

#[derive(clap::Args)]
struct Common {
    /// Configuration file (`key = value` lines).
    #[arg(long)]
    config: PathBuf,
    /// Output directory; overrides `output.dir`.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Seed of the random test data; overrides `experiment.seed`.
    #[arg(long)]
    seed: Option<u64>,
    /// Concurrent solves; overrides `experiment.workers`.
    #[arg(long)]
    workers: Option<usize>,
}

fn main() -> ExitCode {
    match real_main() {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

fn real_main() -> Result<()> {
    let cli = Cli::parse();
    let (kind, args) = match cli.command {
        Command::Cell(a) => (ExperimentKind::Cell, a),
        Command::Fine(a) => (ExperimentKind::Fine, a),
        Command::Scaling(a) => (ExperimentKind::Scaling, a),
        Command::UnfoldCheck(a) => (ExperimentKind::UnfoldCheck, a),
        Command::Darcy(a) => (ExperimentKind::Darcy, a),
    };
    let mut config = ExperimentConfig::load(&args.config, kind)
        .with_context(|| format!("reading {}", args.config.display()))?;
    if let Some(out) = &args.out {
        config = config.with_override("output.dir", &out.to_string_lossy())?;
    }
    if let Some(seed) = args.seed {
        config = config.with_override("experiment.seed", &seed.to_string())?;
    }
    if let Some(w) = args.workers {
        config = config.with_override("experiment.workers", &w.to_string())?;
    }
    let outcome = run(&config)?;
    println!("{}", outcome.summary);
    for f in &outcome.files {
        println!("wrote {}", f.display());
    }
    Ok(())
}
