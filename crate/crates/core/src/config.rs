//! Application configuration: a strict JSON document whose sections mirror
//! the module types. Every field is optional and unknown keys are rejected.

use serde::{Deserialize, Serialize};

use crate::arena::{ArenaSpec, RobotSpec};
use crate::controller::NetworkConfig;
use crate::evolution::{EvolutionConfig, Setup, TrialConfig};
use crate::experiments::SweepConfig;
use crate::vision::CameraSpec;
use crate::{Error, Result};

pub const DESK_FOVS: [f64; 6] = [5.0, 15.0, 45.0, 90.0, 135.0, 180.0];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SweepSection {
    /// Explicit grid; overrides `fov_min`/`fov_max`/`fov_step` when present.
    pub fov_values: Option<Vec<f64>>,
    pub fov_min: f64,
    pub fov_max: f64,
    pub fov_step: f64,
    pub replicates: usize,
    pub base_seed: Option<u64>,
}

impl Default for SweepSection {
    fn default() -> Self {
        Self {
            fov_values: None,
            fov_min: 0.0,
            fov_max: 180.0,
            fov_step: 2.0,
            replicates: 5,
            base_seed: None,
        }
    }
}

impl SweepSection {
    pub fn fov_grid(&self) -> Vec<f64> {
        if let Some(values) = &self.fov_values {
            return values.clone();
        }
        if self.fov_step <= 0.0 || self.fov_step.is_nan() || self.fov_min > self.fov_max {
            return Vec::new();
        }
        let span = self.fov_max - self.fov_min;
        let count = (span / self.fov_step + 1e-9).floor() as usize + 1;
        (0..count)
            .map(|k| {
                let v = self.fov_min + k as f64 * self.fov_step;
                ((v * 1e9).round() / 1e9).min(self.fov_max)
            })
            .collect()
    }

    fn validate(&self) -> Result<()> {
        if self.fov_values.is_none() {
            if !(self.fov_step.is_finite() && self.fov_step > 0.0) {
                return Err(Error::config("sweep.fov_step", "must be a positive number"));
            }
            for (name, v) in [("sweep.fov_min", self.fov_min), ("sweep.fov_max", self.fov_max)] {
                if !(0.0..=180.0).contains(&v) {
                    return Err(Error::config(name, "must lie in [0, 180] degrees"));
                }
            }
            if self.fov_min > self.fov_max {
                return Err(Error::config("sweep.fov_min", "must not exceed sweep.fov_max"));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AppConfig {
    pub arena: ArenaSpec,
    pub robot: RobotSpec,
    pub camera: CameraSpec,
    pub network: NetworkConfig,
    pub trial: TrialConfig,
    pub evolution: EvolutionConfig,
    pub sweep: SweepSection,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Preset {
    /// Six FOVs, population 30, 30 generations, 3 replicates.
    Desk,
    /// FOV 0..180 every 2 degrees, population 60, 100 generations, 5 replicates.
    Paper,
}

impl AppConfig {
    pub fn setup(&self) -> Setup {
        Setup {
            arena: self.arena.clone(),
            robot: self.robot,
            camera: self.camera,
            network: self.network,
            trial: self.trial,
            evolution: self.evolution,
        }
    }

    pub fn sweep_config(&self, base_seed: u64) -> SweepConfig {
        SweepConfig {
            fov_values: self.sweep.fov_grid(),
            replicates: self.sweep.replicates,
            base_seed,
            setup: self.setup(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.setup().validate()?;
        self.sweep.validate()?;
        self.sweep_config(0).validate()
    }

    pub fn apply_preset(&mut self, preset: Preset) {
        match preset {
            Preset::Desk => {
                self.sweep.fov_values = Some(DESK_FOVS.to_vec());
                self.sweep.replicates = 3;
                self.evolution.population_size = 30;
                self.evolution.generations = 30;
            }
            Preset::Paper => {
                self.sweep.fov_values = None;
                self.sweep.fov_min = 0.0;
                self.sweep.fov_max = 180.0;
                self.sweep.fov_step = 2.0;
                self.sweep.replicates = 5;
                self.evolution.population_size = 60;
                self.evolution.generations = 100;
            }
        }
    }
}

/// Parses and validates a configuration document, filling in defaults.
pub fn parse_config(text: &str) -> Result<AppConfig> {
    let mut de = serde_json::Deserializer::from_str(text);
    let config: AppConfig = serde_path_to_error::deserialize(&mut de).map_err(|e| {
        let field = e.path().to_string();
        json_error(e.into_inner(), field)
    })?;
    de.end().map_err(|e| json_error(e, String::new()))?;
    config.validate()?;
    Ok(config)
}

fn json_error(e: serde_json::Error, field: String) -> Error {
    use serde_json::error::Category;
    match e.classify() {
        Category::Syntax | Category::Eof | Category::Io => Error::Syntax {
            line: e.line(),
            column: e.column(),
            message: e.to_string(),
        },
        Category::Data => Error::config(field, e.to_string()),
    }
}
