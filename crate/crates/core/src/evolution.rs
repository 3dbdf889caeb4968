//! Closed-loop fitness evaluation and a generational genetic algorithm with
//! elitism and truncation selection.

use std::f64::consts::PI;

use rand::Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::arena::{build_world, clearance, detect_collision, step_kinematics, ArenaSpec, Pose, RobotSpec, World};
use crate::controller::{
    decode_genome, genome_length, network_step_in_place, outputs_to_wheel_speeds, ControllerState, Genome,
    NetworkConfig, NetworkParams, NetworkSpec, GENE_LIMIT,
};
use crate::rng::{Role, StreamKey};
use crate::vision::{render_into, CameraSpec};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrialConfig {
    pub steps: usize,
    pub dt: f64,
    pub starts_per_trial: usize,
}

impl Default for TrialConfig {
    fn default() -> Self {
        Self {
            steps: 400,
            dt: 0.1,
            starts_per_trial: 2,
        }
    }
}

impl TrialConfig {
    pub fn validate(&self) -> Result<()> {
        if self.steps == 0 {
            return Err(Error::config("trial.steps", "must be at least 1"));
        }
        if !(self.dt.is_finite() && self.dt > 0.0) {
            return Err(Error::config("trial.dt", "must be a positive number"));
        }
        if self.starts_per_trial == 0 {
            return Err(Error::config("trial.starts_per_trial", "must be at least 1"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EvolutionConfig {
    pub population_size: usize,
    pub generations: usize,
    pub elite_count: usize,
    pub parent_count: usize,
    pub crossover_prob: f64,
    pub mutation_prob: f64,
    pub mutation_std: f64,
    pub init_range: f64,
}

impl Default for EvolutionConfig {
    fn default() -> Self {
        Self {
            population_size: 60,
            generations: 100,
            elite_count: 1,
            parent_count: 15,
            crossover_prob: 0.1,
            mutation_prob: 0.1,
            mutation_std: 0.6,
            init_range: GENE_LIMIT,
        }
    }
}

impl EvolutionConfig {
    pub fn validate(&self) -> Result<()> {
        let field = |name: &str| format!("evolution.{name}");
        if self.population_size < 2 {
            return Err(Error::config(field("population_size"), "must be at least 2"));
        }
        if self.generations == 0 {
            return Err(Error::config(field("generations"), "must be at least 1"));
        }
        if self.parent_count < 2 || self.parent_count > self.population_size {
            return Err(Error::config(
                field("parent_count"),
                "must lie between 2 and population_size",
            ));
        }
        if self.elite_count >= self.parent_count {
            return Err(Error::config(field("elite_count"), "must be smaller than parent_count"));
        }
        for (name, p) in [
            ("crossover_prob", self.crossover_prob),
            ("mutation_prob", self.mutation_prob),
        ] {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::config(field(name), "must be a probability in [0, 1]"));
            }
        }
        if !(self.mutation_std.is_finite() && self.mutation_std >= 0.0) {
            return Err(Error::config(field("mutation_std"), "must be a non-negative number"));
        }
        if !(0.0..=GENE_LIMIT).contains(&self.init_range) {
            return Err(Error::config(field("init_range"), "must lie in [0, 4]"));
        }
        Ok(())
    }
}

/// Everything a single evolution run needs besides its FOV and seed.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Setup {
    pub arena: ArenaSpec,
    pub robot: RobotSpec,
    pub camera: CameraSpec,
    pub network: NetworkConfig,
    pub trial: TrialConfig,
    pub evolution: EvolutionConfig,
}

impl Setup {
    pub fn network_spec(&self) -> NetworkSpec {
        NetworkSpec::new(self.camera.pixel_count, self.network.n_hidden)
    }

    pub fn validate(&self) -> Result<()> {
        self.arena.validate()?;
        self.robot.validate()?;
        self.camera.validate()?;
        self.network_spec().validate()?;
        self.trial.validate()?;
        self.evolution.validate()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Individual {
    pub genome: Genome,
    pub fitness: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GenerationStats {
    pub generation: usize,
    pub best_fitness: f64,
    pub mean_fitness: f64,
    pub best_genome: Genome,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunHistory {
    pub fov_deg: f64,
    pub seed: u64,
    pub stats: Vec<GenerationStats>,
}

impl RunHistory {
    pub fn best_series(&self) -> Vec<f64> {
        self.stats.iter().map(|s| s.best_fitness).collect()
    }

    pub fn mean_series(&self) -> Vec<f64> {
        self.stats.iter().map(|s| s.mean_fitness).collect()
    }
}

/// Clearance, in body radii, below which the proximity penalty starts.
pub const PROXIMITY_RADII: f64 = 4.0;

/// Per-step navigation reward: fast, straight and away from walls.
pub fn fitness_step(v_left: f64, v_right: f64, clearance_value: f64, spec: &RobotSpec) -> f64 {
    let max = spec.max_wheel_speed;
    let speed = (v_left.abs() + v_right.abs()) / (2.0 * max);
    let turning = (v_left - v_right).abs() / (2.0 * max);
    let proximity = (1.0 - clearance_value / (PROXIMITY_RADII * spec.body_radius)).clamp(0.0, 1.0);
    (speed * (1.0 - turning.sqrt()) * (1.0 - proximity)).clamp(0.0, 1.0)
}

/// A validated world plus the specs needed to run trials in it.
#[derive(Debug, Clone)]
pub struct Simulation {
    pub world: World,
    pub robot: RobotSpec,
    pub camera: CameraSpec,
    pub network: NetworkSpec,
    pub trial: TrialConfig,
}

impl Simulation {
    pub fn new(setup: &Setup, fov_deg: f64) -> Result<Self> {
        let camera = setup.camera.with_fov(fov_deg);
        let setup = Setup {
            camera,
            ..setup.clone()
        };
        setup.validate()?;
        Ok(Self {
            world: build_world(setup.arena.clone())?,
            robot: setup.robot,
            camera,
            network: setup.network_spec(),
            trial: setup.trial,
        })
    }
}

/// One control step of a trial, as recorded for replays.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceStep {
    pub step: usize,
    pub pose: Pose,
    pub v_left: f64,
    pub v_right: f64,
    pub phi: f64,
    pub collided: bool,
}

/// Runs one start and returns the mean per-step fitness. After a collision
/// the robot stays frozen and every remaining step scores zero.
pub fn simulate_start(
    sim: &Simulation,
    params: &NetworkParams,
    start: Pose,
    steps: usize,
    mut trace: Option<&mut Vec<TraceStep>>,
) -> Result<f64> {
    if detect_collision(&sim.world, &start, &sim.robot) {
        return Err(Error::Harness(format!(
            "start pose ({}, {}) collides with a wall",
            start.x, start.y
        )));
    }
    let mut state = ControllerState::reset(&sim.network);
    let mut pixels = Vec::with_capacity(sim.camera.pixel_count);
    let mut pose = start;
    let mut collided = false;
    let mut total = 0.0;
    for step in 0..steps {
        let (mut v_left, mut v_right, mut phi) = (0.0, 0.0, 0.0);
        if !collided {
            render_into(&sim.world, &pose, &sim.camera, &mut pixels)?;
            let outputs = network_step_in_place(params, &mut state, &pixels)?;
            (v_left, v_right) = outputs_to_wheel_speeds(outputs, &sim.robot);
            pose = step_kinematics(pose, v_left, v_right, sim.trial.dt, &sim.robot)?;
            let gap = clearance(&sim.world, &pose, &sim.robot);
            if gap <= 0.0 {
                collided = true;
            } else {
                phi = fitness_step(v_left, v_right, gap, &sim.robot);
            }
        }
        total += phi;
        if let Some(trace) = trace.as_deref_mut() {
            trace.push(TraceStep {
                step,
                pose,
                v_left,
                v_right,
                phi,
                collided,
            });
        }
    }
    Ok(total / steps as f64)
}

/// Mean fitness over the given start poses.
pub fn evaluate_individual(sim: &Simulation, genome: &Genome, start_poses: &[Pose]) -> Result<f64> {
    if start_poses.len() != sim.trial.starts_per_trial {
        return Err(Error::Harness(format!(
            "expected {} start poses, got {}",
            sim.trial.starts_per_trial,
            start_poses.len()
        )));
    }
    let params = decode_genome(genome, &sim.network)?;
    let mut sum = 0.0;
    for &start in start_poses {
        sum += simulate_start(sim, &params, start, sim.trial.steps, None)?;
    }
    Ok(sum / start_poses.len() as f64)
}

/// Uniform start poses outside the proximity band, so no trial begins
/// already penalised or committed to a crash.
pub fn draw_start_poses(world: &World, robot: &RobotSpec, count: usize, key: StreamKey) -> Result<Vec<Pose>> {
    const MAX_ATTEMPTS: usize = 100_000;
    let mut rng = key.rng();
    let (w, h, r) = (world.arena.width, world.arena.height, robot.body_radius);
    let margin = PROXIMITY_RADII * r;
    if w <= 2.0 * (margin + r) || h <= 2.0 * (margin + r) {
        return Err(Error::Harness("arena too small for the robot".into()));
    }
    let mut poses = Vec::with_capacity(count);
    let mut attempts = 0;
    while poses.len() < count {
        attempts += 1;
        if attempts > MAX_ATTEMPTS {
            return Err(Error::Harness("could not place a collision-free start pose".into()));
        }
        let pose = Pose::new(
            rng.random_range(2.0 * r..w - 2.0 * r),
            rng.random_range(2.0 * r..h - 2.0 * r),
            rng.random_range(-PI..PI),
        );
        if clearance(world, &pose, robot) >= margin {
            poses.push(pose);
        }
    }
    Ok(poses)
}

pub fn init_population(config: &EvolutionConfig, spec: &NetworkSpec, seed: u64) -> Result<Vec<Individual>> {
    let len = genome_length(spec)?;
    let range = config.init_range;
    Ok((0..config.population_size)
        .map(|i| {
            let weights = if range == 0.0 {
                vec![0.0; len]
            } else {
                let mut rng = StreamKey::new(seed, 0, Role::InitGenome, i).rng();
                (0..len).map(|_| rng.random_range(-range..=range)).collect()
            };
            Individual {
                genome: Genome::new(weights),
                fitness: None,
            }
        })
        .collect())
}

/// Population indices by descending fitness, ties by lower index.
fn rank(population: &[Individual]) -> Result<Vec<(usize, f64)>> {
    let mut ranked = population
        .iter()
        .enumerate()
        .map(|(i, ind)| {
            ind.fitness
                .map(|f| (i, f))
                .ok_or_else(|| Error::Harness(format!("individual {i} has not been evaluated")))
        })
        .collect::<Result<Vec<_>>>()?;
    ranked.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
    Ok(ranked)
}

/// Breeds the next population. Offspring slot `k` draws only from its own
/// stream `(seed, generation, Offspring, k)`.
pub fn next_generation(
    population: &[Individual],
    config: &EvolutionConfig,
    seed: u64,
    generation: usize,
) -> Result<Vec<Genome>> {
    let ranked = rank(population)?;
    if ranked.len() < config.parent_count {
        return Err(Error::Harness(format!(
            "population of {} is smaller than parent_count {}",
            ranked.len(),
            config.parent_count
        )));
    }
    let parents: Vec<&Genome> = ranked[..config.parent_count]
        .iter()
        .map(|&(i, _)| &population[i].genome)
        .collect();
    let noise = Normal::new(0.0, config.mutation_std)
        .map_err(|e| Error::config("evolution.mutation_std", e.to_string()))?;

    let mut next: Vec<Genome> = parents[..config.elite_count].iter().map(|g| (*g).clone()).collect();
    for slot in config.elite_count..config.population_size {
        let mut rng = StreamKey::new(seed, generation, Role::Offspring, slot).rng();
        let first = rng.random_range(0..parents.len());
        let mut second = rng.random_range(0..parents.len() - 1);
        if second >= first {
            second += 1;
        }
        let (a, b) = (&parents[first].weights, &parents[second].weights);
        let crossover = rng.random::<f64>() < config.crossover_prob;
        let mut child = if crossover && a.len() >= 2 {
            let cut = rng.random_range(1..a.len());
            a[..cut].iter().chain(&b[cut..]).copied().collect()
        } else {
            a.clone()
        };
        for gene in child.iter_mut() {
            if rng.random::<f64>() < config.mutation_prob {
                *gene = (*gene + noise.sample(&mut rng)).clamp(-GENE_LIMIT, GENE_LIMIT);
            }
        }
        next.push(Genome::new(child));
    }
    Ok(next)
}

/// How start poses are chosen across generations.
#[derive(Debug, Clone, PartialEq)]
pub enum StartPolicy {
    /// Fresh poses each generation, shared by every individual in it.
    PerGeneration,
    /// The same poses in every generation.
    Fixed(Vec<Pose>),
}

pub fn run_evolution(fov_deg: f64, setup: &Setup, seed: u64) -> Result<RunHistory> {
    run_evolution_with(fov_deg, setup, seed, &StartPolicy::PerGeneration)
}

/// Evaluates individuals on the current rayon pool; the result does not
/// depend on the pool size.
pub fn run_evolution_with(fov_deg: f64, setup: &Setup, seed: u64, starts: &StartPolicy) -> Result<RunHistory> {
    let sim = Simulation::new(setup, fov_deg)?;
    let config = &setup.evolution;
    let mut population = init_population(config, &sim.network, seed)?;
    let mut stats = Vec::with_capacity(config.generations);
    for generation in 0..config.generations {
        let poses = match starts {
            StartPolicy::PerGeneration => draw_start_poses(
                &sim.world,
                &sim.robot,
                sim.trial.starts_per_trial,
                StreamKey::new(seed, generation, Role::StartPoses, 0),
            )?,
            StartPolicy::Fixed(poses) => poses.clone(),
        };
        let fitness: Vec<f64> = population
            .par_iter()
            .map(|ind| evaluate_individual(&sim, &ind.genome, &poses))
            .collect::<Result<_>>()?;
        for (ind, f) in population.iter_mut().zip(&fitness) {
            ind.fitness = Some(*f);
        }
        let ranked = rank(&population)?;
        let (best_index, best_fitness) = ranked[0];
        let mean = fitness.iter().sum::<f64>() / fitness.len() as f64;
        stats.push(GenerationStats {
            generation,
            best_fitness,
            // Guards against the rounded mean of equal values exceeding them.
            mean_fitness: mean.min(best_fitness),
            best_genome: population[best_index].genome.clone(),
        });
        if generation + 1 < config.generations {
            population = next_generation(&population, config, seed, generation)?
                .into_iter()
                .map(|genome| Individual { genome, fitness: None })
                .collect();
        }
    }
    Ok(RunHistory { fov_deg, seed, stats })
}
