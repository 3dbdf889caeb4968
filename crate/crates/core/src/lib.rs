//! Evolutionary robotics workbench: evolves discrete-time recurrent neural
//! controllers for a vision-guided differential-drive robot in a walled
//! arena, and sweeps the camera field of view across evolution runs.
//!
//! The crate is organised bottom-up:
//!
//! - [`arena`]: world geometry, kinematics, ray casting and collisions.
//! - [`vision`]: linear camera producing depth-like pixel readings.
//! - [`controller`]: recurrent network and its flat genome codec.
//! - [`evolution`]: closed-loop fitness evaluation and the genetic algorithm.
//! - [`experiments`]: FOV sweeps, replicate aggregation and analyses.
//! - [`config`] and [`export`]: configuration loading and CSV/JSON outputs.
//!
//! Every stochastic draw goes through [`rng::StreamKey`], so results are a
//! pure function of the configuration and base seed regardless of how many
//! worker threads evaluate individuals.

pub mod arena;
pub mod config;
pub mod controller;
mod error;
pub mod evolution;
pub mod experiments;
pub mod export;
pub mod rng;
pub mod vision;

pub use arena::{ArenaSpec, Pose, RobotSpec, WallSegment, World};
pub use config::AppConfig;
pub use controller::{ControllerState, Genome, GenomeFile, NetworkParams, NetworkSpec};
pub use error::{Error, Result};
pub use evolution::{
    EvolutionConfig, GenerationStats, Individual, RunHistory, Setup, TrialConfig,
};
pub use experiments::{AggregateSeries, FitnessTensor, SeriesChoice, SweepConfig, SweepResult};
pub use vision::{CameraImage, CameraSpec};

/// Version string recorded in run manifests.
pub const VERSION: &str = concat!("evonav ", env!("CARGO_PKG_VERSION"));
