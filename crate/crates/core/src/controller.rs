//! Discrete-time recurrent controller and its direct genome encoding.
//!
//! One fully recurrent tanh hidden layer feeds two logistic motor units:
//!
//! ```text
//! h' = tanh(W_in x + W_rec h + b_h)
//! y  = logistic(W_out h' + b_out)
//! ```
//!
//! Genes are laid out as `W_in` rows, `W_rec` rows, `b_h`, `W_out` rows,
//! `b_out`; each matrix row belongs to one receiving unit.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::arena::RobotSpec;
use crate::vision::CameraImage;
use crate::{Error, Result};

/// Genes are kept inside `[-GENE_LIMIT, GENE_LIMIT]` by mutation.
pub const GENE_LIMIT: f64 = 4.0;
pub const N_OUTPUTS: usize = 2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NetworkSpec {
    pub n_inputs: usize,
    pub n_hidden: usize,
    pub n_outputs: usize,
}

impl NetworkSpec {
    pub fn new(n_inputs: usize, n_hidden: usize) -> Self {
        Self {
            n_inputs,
            n_hidden,
            n_outputs: N_OUTPUTS,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_inputs == 0 {
            return Err(Error::config("network.n_inputs", "must be at least 1"));
        }
        if self.n_hidden == 0 {
            return Err(Error::config("network.n_hidden", "must be at least 1"));
        }
        if self.n_outputs != N_OUTPUTS {
            return Err(Error::config("network.n_outputs", "must be exactly 2"));
        }
        Ok(())
    }
}

pub fn genome_length(spec: &NetworkSpec) -> Result<usize> {
    spec.validate()?;
    let h = spec.n_hidden;
    Ok(h * (spec.n_inputs + h + 1) + spec.n_outputs * (h + 1))
}

/// Configurable part of the architecture; inputs come from the camera.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NetworkConfig {
    pub n_hidden: usize,
}

impl Default for NetworkConfig {
    fn default() -> Self {
        Self { n_hidden: 8 }
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Genome {
    pub weights: Vec<f64>,
}

impl Genome {
    pub fn new(weights: Vec<f64>) -> Self {
        Self { weights }
    }

    pub fn zeros(len: usize) -> Self {
        Self::new(vec![0.0; len])
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }
}

/// Decoded network weights. Matrices are row-major, one row per receiving unit.
#[derive(Debug, Clone, PartialEq)]
pub struct NetworkParams {
    pub spec: NetworkSpec,
    pub w_in: Vec<f64>,
    pub w_rec: Vec<f64>,
    pub b_hidden: Vec<f64>,
    pub w_out: Vec<f64>,
    pub b_out: Vec<f64>,
}

impl NetworkParams {
    pub fn zeros(spec: NetworkSpec) -> Self {
        let (i, h, o) = (spec.n_inputs, spec.n_hidden, spec.n_outputs);
        Self {
            spec,
            w_in: vec![0.0; h * i],
            w_rec: vec![0.0; h * h],
            b_hidden: vec![0.0; h],
            w_out: vec![0.0; o * h],
            b_out: vec![0.0; o],
        }
    }

    /// Flattens back into decode order.
    pub fn encode(&self) -> Genome {
        let mut weights = Vec::with_capacity(
            self.w_in.len() + self.w_rec.len() + self.b_hidden.len() + self.w_out.len() + self.b_out.len(),
        );
        for part in [&self.w_in, &self.w_rec, &self.b_hidden, &self.w_out, &self.b_out] {
            weights.extend_from_slice(part);
        }
        Genome { weights }
    }
}

pub fn decode_genome(genome: &Genome, spec: &NetworkSpec) -> Result<NetworkParams> {
    let expected = genome_length(spec)?;
    if genome.len() != expected {
        return Err(Error::Codec(format!(
            "genome has {} genes, network {}x{}x{} needs {expected}",
            genome.len(),
            spec.n_inputs,
            spec.n_hidden,
            spec.n_outputs
        )));
    }
    if let Some(i) = genome.weights.iter().position(|w| !w.is_finite()) {
        return Err(Error::Codec(format!("gene {i} is not finite")));
    }
    let (i, h, o) = (spec.n_inputs, spec.n_hidden, spec.n_outputs);
    let mut rest = genome.weights.as_slice();
    let mut take = |n: usize| {
        let (head, tail) = rest.split_at(n);
        rest = tail;
        head.to_vec()
    };
    Ok(NetworkParams {
        spec: *spec,
        w_in: take(h * i),
        w_rec: take(h * h),
        b_hidden: take(h),
        w_out: take(o * h),
        b_out: take(o),
    })
}

/// Recurrent hidden activations carried between control steps.
#[derive(Debug, Clone, PartialEq)]
pub struct ControllerState {
    pub hidden: Vec<f64>,
}

impl ControllerState {
    pub fn reset(spec: &NetworkSpec) -> Self {
        Self {
            hidden: vec![0.0; spec.n_hidden],
        }
    }
}

fn logistic(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// One network update; returns the two motor activations and the new state.
pub fn network_step(
    params: &NetworkParams,
    state: &ControllerState,
    image: &CameraImage,
) -> Result<([f64; 2], ControllerState)> {
    let mut next = state.clone();
    let outputs = network_step_in_place(params, &mut next, &image.readings)?;
    Ok((outputs, next))
}

pub(crate) fn network_step_in_place(
    params: &NetworkParams,
    state: &mut ControllerState,
    inputs: &[f64],
) -> Result<[f64; 2]> {
    let spec = &params.spec;
    if inputs.len() != spec.n_inputs {
        return Err(Error::Codec(format!(
            "image has {} pixels, network expects {}",
            inputs.len(),
            spec.n_inputs
        )));
    }
    if state.hidden.len() != spec.n_hidden {
        return Err(Error::Codec(format!(
            "state has {} hidden units, network has {}",
            state.hidden.len(),
            spec.n_hidden
        )));
    }
    let (ni, nh) = (spec.n_inputs, spec.n_hidden);
    let hidden: Vec<f64> = (0..nh)
        .map(|j| {
            let drive = dot(&params.w_in[j * ni..(j + 1) * ni], inputs)
                + dot(&params.w_rec[j * nh..(j + 1) * nh], &state.hidden)
                + params.b_hidden[j];
            drive.tanh()
        })
        .collect();
    let mut outputs = [0.0; 2];
    for (k, out) in outputs.iter_mut().enumerate() {
        *out = logistic(dot(&params.w_out[k * nh..(k + 1) * nh], &hidden) + params.b_out[k]);
    }
    state.hidden = hidden;
    Ok(outputs)
}

/// Maps motor activations in `[0, 1]` onto `[-max, +max]` wheel speeds.
pub fn outputs_to_wheel_speeds(outputs: [f64; 2], spec: &RobotSpec) -> (f64, f64) {
    let speed = |o: f64| (2.0 * o.clamp(0.0, 1.0) - 1.0) * spec.max_wheel_speed;
    (speed(outputs[0]), speed(outputs[1]))
}

/// On-disk genome document.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GenomeFile {
    pub spec: NetworkSpec,
    pub weights: Vec<f64>,
    pub fitness: Option<f64>,
    pub fov_deg: Option<f64>,
}

impl GenomeFile {
    pub fn new(spec: NetworkSpec, genome: &Genome, fitness: Option<f64>, fov_deg: Option<f64>) -> Self {
        Self {
            spec,
            weights: genome.weights.clone(),
            fitness,
            fov_deg,
        }
    }

    pub fn genome(&self) -> Genome {
        Genome::new(self.weights.clone())
    }

    /// Parses and checks the weights against the embedded spec.
    pub fn from_json(text: &str) -> Result<Self> {
        let file: GenomeFile = serde_json::from_str(text).map_err(|e| Error::Syntax {
            line: e.line(),
            column: e.column(),
            message: e.to_string(),
        })?;
        decode_genome(&file.genome(), &file.spec)?;
        Ok(file)
    }

    pub fn to_json(&self) -> String {
        let mut text = serde_json::to_string_pretty(self).expect("genome serializes");
        text.push('\n');
        text
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }
}
