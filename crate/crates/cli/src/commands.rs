use std::fmt;
use std::fs;
use std::path::Path;

use evonav::config::{parse_config, Preset};
use evonav::controller::{decode_genome, GenomeFile};
use evonav::evolution::{draw_start_poses, run_evolution, simulate_start, Simulation};
use evonav::experiments::{aggregate_replicates, best_fov, run_sweep, with_jobs, SeriesChoice};
use evonav::export::{history_csv, trajectory_csv, AnalysisFiles, RunManifest};
use evonav::rng::{derive_run_seed, Role, StreamKey};
use evonav::{AppConfig, Error, Pose, SweepResult};

use crate::{Cli, Command, EvolveArgs, PresetArg, ReplayArgs, ReportArgs, SharedArgs, SweepArgs};

pub struct CliError {
    code: u8,
    message: String,
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        self.code
    }

    fn io(path: &Path, err: std::io::Error) -> Self {
        Self {
            code: 3,
            message: format!("{}: {err}", path.display()),
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

impl From<Error> for CliError {
    fn from(err: Error) -> Self {
        Self {
            code: if err.is_validation() { 2 } else { 3 },
            message: err.to_string(),
        }
    }
}

type CliResult<T = ()> = Result<T, CliError>;

pub fn run(cli: Cli) -> CliResult {
    let shared = cli.shared;
    match cli.command {
        Command::Evolve(args) => evolve(&shared, args),
        Command::Sweep(args) => sweep(&shared, args),
        Command::Replay(args) => replay(&shared, args),
        Command::Report(args) => report(&shared, args),
    }
}

fn read(path: &Path) -> CliResult<String> {
    fs::read_to_string(path).map_err(|e| CliError::io(path, e))
}

fn write(dir: &Path, name: &str, contents: &str) -> CliResult {
    let path = dir.join(name);
    fs::write(&path, contents).map_err(|e| CliError::io(&path, e))
}

fn prepare_out(dir: &Path) -> CliResult {
    fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))
}

fn load_config(shared: &SharedArgs) -> CliResult<AppConfig> {
    match &shared.config {
        Some(path) => Ok(parse_config(&read(path)?)?),
        None => Ok(AppConfig::default()),
    }
}

/// Flag, then config file, then `$EVONAV_SEED`, then 0.
fn resolve_seed(shared: &SharedArgs, config: &AppConfig) -> CliResult<u64> {
    if let Some(seed) = shared.seed.or(config.sweep.base_seed) {
        return Ok(seed);
    }
    match std::env::var("EVONAV_SEED") {
        Ok(text) => text.trim().parse().map_err(|_| CliError {
            code: 2,
            message: format!("EVONAV_SEED `{text}` is not an unsigned integer"),
        }),
        Err(_) => Ok(0),
    }
}

fn resolve_jobs(shared: &SharedArgs) -> usize {
    shared
        .jobs
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()))
        .max(1)
}

fn evolve(shared: &SharedArgs, args: EvolveArgs) -> CliResult {
    let mut config = load_config(shared)?;
    if let Some(fov) = args.fov {
        config.camera.fov_deg = fov;
    }
    if let Some(g) = args.generations {
        config.evolution.generations = g;
    }
    if let Some(p) = args.population {
        config.evolution.population_size = p;
    }
    config.setup().validate()?;
    let seed = resolve_seed(shared, &config)?;
    let jobs = resolve_jobs(shared);
    let fov = config.camera.fov_deg;
    let setup = config.setup();

    // Same seeding as a one-cell sweep, so `evolve` reproduces `sweep --fovs F --replicates 1`.
    let history = with_jobs(jobs, || run_evolution(fov, &setup, derive_run_seed(seed, 0, 0)))??;
    let result = SweepResult {
        fov_values: vec![fov],
        replicates: 1,
        generations: history.stats.len(),
        runs: vec![history],
    };
    let last = result.runs[0].stats.last().expect("at least one generation");
    let genome = GenomeFile::new(setup.network_spec(), &last.best_genome, Some(last.best_fitness), Some(fov));

    prepare_out(&shared.out)?;
    write(&shared.out, "history.csv", &history_csv(&result.tensor()))?;
    write(&shared.out, "best_genome.json", &genome.to_json())?;
    write(&shared.out, "manifest.json", &RunManifest::new("evolve", seed, jobs, &config).to_json())?;
    println!("fov {fov}: final best {} mean {}", last.best_fitness, last.mean_fitness);
    Ok(())
}

fn sweep(shared: &SharedArgs, args: SweepArgs) -> CliResult {
    let mut config = load_config(shared)?;
    match args.preset {
        Some(PresetArg::Desk) => config.apply_preset(Preset::Desk),
        Some(PresetArg::Paper) => config.apply_preset(Preset::Paper),
        None => {}
    }
    if let Some(fovs) = args.fovs {
        config.sweep.fov_values = Some(fovs);
    }
    if args.fov_min.is_some() || args.fov_max.is_some() || args.fov_step.is_some() {
        config.sweep.fov_values = None;
    }
    if let Some(v) = args.fov_min {
        config.sweep.fov_min = v;
    }
    if let Some(v) = args.fov_max {
        config.sweep.fov_max = v;
    }
    if let Some(v) = args.fov_step {
        config.sweep.fov_step = v;
    }
    if let Some(r) = args.replicates {
        config.sweep.replicates = r;
    }
    if let Some(g) = args.generations {
        config.evolution.generations = g;
    }
    if let Some(p) = args.population {
        config.evolution.population_size = p;
    }
    config.validate()?;
    let seed = resolve_seed(shared, &config)?;
    let jobs = resolve_jobs(shared);
    let sweep = config.sweep_config(seed);

    if args.dry_run {
        let enumerated = sweep.evaluation_plan().count() as u64;
        assert_eq!(enumerated, sweep.evaluation_count());
        println!("fov_values: {}", sweep.fov_values.len());
        println!("replicates: {}", sweep.replicates);
        println!("generations: {}", sweep.setup.evolution.generations);
        println!("population: {}", sweep.setup.evolution.population_size);
        println!("evaluations: {enumerated}");
        return Ok(());
    }

    let result = with_jobs(jobs, || run_sweep(&sweep))??;
    let history = history_csv(&result.tensor());
    let analysis = AnalysisFiles::from_history_csv(&history)?;

    prepare_out(&shared.out)?;
    write(&shared.out, "history.csv", &history)?;
    analysis.write_to(&shared.out)?;
    write(&shared.out, "manifest.json", &RunManifest::new("sweep", seed, jobs, &config).to_json())?;

    let aggregate = aggregate_replicates(&result.tensor());
    println!("best fov (best individual): {}", best_fov(&aggregate, SeriesChoice::Best));
    println!("best fov (average individual): {}", best_fov(&aggregate, SeriesChoice::Average));
    Ok(())
}

fn replay(shared: &SharedArgs, args: ReplayArgs) -> CliResult {
    let mut config = load_config(shared)?;
    let genome_file = GenomeFile::from_json(&read(&args.genome)?)?;
    config.camera.pixel_count = genome_file.spec.n_inputs;
    config.network.n_hidden = genome_file.spec.n_hidden;
    let fov = args.fov.or(genome_file.fov_deg).unwrap_or(config.camera.fov_deg);
    if let Some(steps) = args.steps {
        config.trial.steps = steps;
    }
    let sim = Simulation::new(&config.setup(), fov)?;
    let params = decode_genome(&genome_file.genome(), &sim.network)?;
    let seed = resolve_seed(shared, &config)?;
    let start = match args.start {
        Some([x, y, heading]) => Pose::new(x, y, heading),
        None => draw_start_poses(&sim.world, &sim.robot, 1, StreamKey::new(seed, 0, Role::ReplayStart, 0))?[0],
    };

    let mut trace = Vec::with_capacity(sim.trial.steps);
    simulate_start(&sim, &params, start, sim.trial.steps, Some(&mut trace))?;
    let fitness = trace.iter().map(|s| s.phi).sum::<f64>() / trace.len() as f64;

    prepare_out(&shared.out)?;
    write(&shared.out, "trajectory.csv", &trajectory_csv(&trace))?;
    println!("start {} {} {}", start.x, start.y, start.heading);
    println!("fitness {fitness:?}");
    if let Some(crash) = trace.iter().position(|s| s.collided) {
        println!("collision at step {crash}");
    }
    Ok(())
}

fn report(shared: &SharedArgs, args: ReportArgs) -> CliResult {
    let history = read(&args.history)?;
    let analysis = AnalysisFiles::from_history_csv(&history)?;
    prepare_out(&shared.out)?;
    analysis.write_to(&shared.out)?;
    Ok(())
}
