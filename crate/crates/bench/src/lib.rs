//! Shared fixtures for the criterion benches.

use evonav::controller::{decode_genome, genome_length};
use evonav::evolution::{init_population, Simulation};
use evonav::{EvolutionConfig, Genome, NetworkParams, Pose, Setup};

/// Default setup at the given FOV.
pub fn simulation(fov_deg: f64) -> Simulation {
    Simulation::new(&Setup::default(), fov_deg).expect("default setup is valid")
}

/// A genome drawn the same way generation 0 draws them.
pub fn random_genome(sim: &Simulation, seed: u64) -> Genome {
    let config = EvolutionConfig {
        population_size: 2,
        parent_count: 2,
        ..EvolutionConfig::default()
    };
    let mut pop = init_population(&config, &sim.network, seed).expect("valid config");
    debug_assert_eq!(pop[0].genome.len(), genome_length(&sim.network).unwrap());
    pop.swap_remove(0).genome
}

pub fn random_params(sim: &Simulation, seed: u64) -> NetworkParams {
    decode_genome(&random_genome(sim, seed), &sim.network).expect("length matches spec")
}

pub fn start_poses() -> Vec<Pose> {
    vec![Pose::new(0.3, 0.4, 0.5), Pose::new(0.7, 0.6, -2.5)]
}
