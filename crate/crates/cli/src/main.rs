//! `evonav` command-line driver.
//!
//! Exit codes: 0 success, 2 configuration or validation failure, 3 I/O failure.

mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(name = "evonav", version, about = "Evolve vision-guided robot controllers across camera fields of view")]
struct Cli {
    #[command(flatten)]
    shared: SharedArgs,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct SharedArgs {
    /// JSON configuration file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Base seed. Falls back to the config file, then $EVONAV_SEED, then 0.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Output directory.
    #[arg(long, global = true, default_value = ".")]
    out: PathBuf,

    /// Worker threads; results do not depend on this.
    #[arg(long, global = true)]
    jobs: Option<usize>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Evolve controllers at a single field of view.
    Evolve(EvolveArgs),
    /// Evolve at every FOV of a grid, with replicates, and analyse.
    Sweep(SweepArgs),
    /// Re-run a saved genome from one start pose and record its trajectory.
    Replay(ReplayArgs),
    /// Recompute summary and heatmaps from an existing history.csv.
    Report(ReportArgs),
}

#[derive(Debug, Args)]
struct EvolveArgs {
    /// Camera field of view in degrees.
    #[arg(long, allow_negative_numbers = true)]
    fov: Option<f64>,
    #[arg(long)]
    generations: Option<usize>,
    #[arg(long)]
    population: Option<usize>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum PresetArg {
    Desk,
    Paper,
}

#[derive(Debug, Args)]
struct SweepArgs {
    /// Comma-separated FOV list, e.g. `5,45,90`.
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true, conflicts_with_all = ["fov_min", "fov_max", "fov_step"])]
    fovs: Option<Vec<f64>>,
    #[arg(long, allow_negative_numbers = true)]
    fov_min: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    fov_max: Option<f64>,
    #[arg(long)]
    fov_step: Option<f64>,
    #[arg(long)]
    replicates: Option<usize>,
    #[arg(long)]
    generations: Option<usize>,
    #[arg(long)]
    population: Option<usize>,
    /// Named configuration applied before the other sweep flags.
    #[arg(long, value_enum)]
    preset: Option<PresetArg>,
    /// Count the evaluations the sweep would run, without simulating.
    #[arg(long)]
    dry_run: bool,
}

#[derive(Debug, Args)]
struct ReplayArgs {
    /// Genome JSON file written by `evolve`.
    genome: PathBuf,
    #[arg(long)]
    steps: Option<usize>,
    /// Start pose `x,y,heading`; drawn from the seed when omitted.
    #[arg(long, value_parser = parse_start, allow_hyphen_values = true)]
    start: Option<[f64; 3]>,
    /// Overrides the FOV stored in the genome file.
    #[arg(long, allow_negative_numbers = true)]
    fov: Option<f64>,
}

#[derive(Debug, Args)]
struct ReportArgs {
    /// history.csv written by `sweep` or `evolve`.
    history: PathBuf,
}

fn parse_start(text: &str) -> Result<[f64; 3], String> {
    let values = text
        .split(',')
        .map(|v| v.trim().parse::<f64>().map_err(|e| format!("`{v}`: {e}")))
        .collect::<Result<Vec<_>, _>>()?;
    values
        .try_into()
        .map_err(|v: Vec<f64>| format!("expected x,y,heading but got {} values", v.len()))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match commands::run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(err.exit_code())
        }
    }
}
