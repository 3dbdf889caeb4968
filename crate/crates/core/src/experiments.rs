//! Field-of-view sweeps: independent evolution runs per (FOV, replicate)
//! cell, aggregated over replicates into best/average fitness series.

use rayon::prelude::*;

use crate::evolution::{run_evolution, RunHistory, Setup};
use crate::rng::derive_run_seed;
use crate::{Error, Result};

/// Default relative band for [`stabilization_generation`].
pub const STABILIZATION_TOL: f64 = 0.05;

#[derive(Debug, Clone, PartialEq)]
pub struct SweepConfig {
    pub fov_values: Vec<f64>,
    pub replicates: usize,
    pub base_seed: u64,
    pub setup: Setup,
}

impl SweepConfig {
    pub fn validate(&self) -> Result<()> {
        if self.fov_values.is_empty() {
            return Err(Error::config("sweep.fov_values", "must not be empty"));
        }
        if let Some(v) = self.fov_values.iter().find(|v| !(0.0..=180.0).contains(*v)) {
            return Err(Error::config(
                "sweep.fov_values",
                format!("{v} lies outside [0, 180] degrees"),
            ));
        }
        if self.fov_values.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::config("sweep.fov_values", "must be strictly increasing"));
        }
        if self.replicates == 0 {
            return Err(Error::config("sweep.replicates", "must be at least 1"));
        }
        self.setup.validate()
    }

    /// Every `(fov index, replicate, generation, individual)` evaluation
    /// the sweep performs, in canonical order.
    pub fn evaluation_plan(&self) -> impl Iterator<Item = (usize, usize, usize, usize)> + '_ {
        let evo = self.setup.evolution;
        (0..self.fov_values.len()).flat_map(move |f| {
            (0..self.replicates).flat_map(move |r| {
                (0..evo.generations).flat_map(move |g| (0..evo.population_size).map(move |i| (f, r, g, i)))
            })
        })
    }

    pub fn evaluation_count(&self) -> u64 {
        let evo = &self.setup.evolution;
        self.fov_values.len() as u64 * self.replicates as u64 * evo.generations as u64 * evo.population_size as u64
    }
}

/// Complete sweep output, one run per cell, ordered `[fov][replicate]`.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepResult {
    pub fov_values: Vec<f64>,
    pub replicates: usize,
    pub generations: usize,
    pub runs: Vec<RunHistory>,
}

impl SweepResult {
    pub fn run(&self, fov_index: usize, replicate: usize) -> &RunHistory {
        &self.runs[fov_index * self.replicates + replicate]
    }

    pub fn tensor(&self) -> FitnessTensor {
        let mut tensor = FitnessTensor::new(self.fov_values.clone(), self.replicates, self.generations);
        for (cell, run) in self.runs.iter().enumerate() {
            for s in &run.stats {
                let at = cell * self.generations + s.generation;
                tensor.best[at] = s.best_fitness;
                tensor.mean[at] = s.mean_fitness;
            }
        }
        tensor
    }
}

/// Dense `[fov][replicate][generation]` best and mean fitness.
#[derive(Debug, Clone, PartialEq)]
pub struct FitnessTensor {
    pub fov_values: Vec<f64>,
    pub replicates: usize,
    pub generations: usize,
    pub best: Vec<f64>,
    pub mean: Vec<f64>,
}

impl FitnessTensor {
    pub fn new(fov_values: Vec<f64>, replicates: usize, generations: usize) -> Self {
        let n = fov_values.len() * replicates * generations;
        Self {
            fov_values,
            replicates,
            generations,
            best: vec![0.0; n],
            mean: vec![0.0; n],
        }
    }

    pub fn index(&self, fov_index: usize, replicate: usize, generation: usize) -> usize {
        (fov_index * self.replicates + replicate) * self.generations + generation
    }

    pub fn get(&self, fov_index: usize, replicate: usize, generation: usize) -> (f64, f64) {
        let i = self.index(fov_index, replicate, generation);
        (self.best[i], self.mean[i])
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SeriesChoice {
    Best,
    Average,
}

/// Replicate means, `[fov][generation]`.
#[derive(Debug, Clone, PartialEq)]
pub struct AggregateSeries {
    pub fov_values: Vec<f64>,
    pub generations: usize,
    pub best: Vec<f64>,
    pub mean: Vec<f64>,
}

impl AggregateSeries {
    pub fn series(&self, fov_index: usize, choice: SeriesChoice) -> &[f64] {
        let data = match choice {
            SeriesChoice::Best => &self.best,
            SeriesChoice::Average => &self.mean,
        };
        &data[fov_index * self.generations..(fov_index + 1) * self.generations]
    }
}

/// Runs every cell on the current rayon pool. Cell `(f, r)` is seeded with
/// `derive_run_seed(base_seed, f, r)`.
pub fn run_sweep(config: &SweepConfig) -> Result<SweepResult> {
    config.validate()?;
    let cells: Vec<(usize, usize)> = (0..config.fov_values.len())
        .flat_map(|f| (0..config.replicates).map(move |r| (f, r)))
        .collect();
    let runs = cells
        .par_iter()
        .map(|&(f, r)| {
            run_evolution(
                config.fov_values[f],
                &config.setup,
                derive_run_seed(config.base_seed, f, r),
            )
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(SweepResult {
        fov_values: config.fov_values.clone(),
        replicates: config.replicates,
        generations: config.setup.evolution.generations,
        runs,
    })
}

/// Runs `f` on a dedicated pool of `jobs` threads.
pub fn with_jobs<T: Send>(jobs: usize, f: impl FnOnce() -> T + Send) -> Result<T> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .map_err(|e| Error::Harness(format!("cannot start worker pool: {e}")))?;
    Ok(pool.install(f))
}

pub fn aggregate_replicates(tensor: &FitnessTensor) -> AggregateSeries {
    let (nf, nr, ng) = (tensor.fov_values.len(), tensor.replicates, tensor.generations);
    let mut best = Vec::with_capacity(nf * ng);
    let mut mean = Vec::with_capacity(nf * ng);
    for f in 0..nf {
        for g in 0..ng {
            let cells = (0..nr).map(|r| tensor.index(f, r, g));
            best.push(replicate_mean(cells.clone().map(|i| tensor.best[i])));
            mean.push(replicate_mean(cells.map(|i| tensor.mean[i])));
        }
    }
    AggregateSeries {
        fov_values: tensor.fov_values.clone(),
        generations: ng,
        best,
        mean,
    }
}

/// Arithmetic mean, kept inside the sample range despite rounding.
fn replicate_mean(values: impl Iterator<Item = f64>) -> f64 {
    let (mut sum, mut n, mut lo, mut hi) = (0.0, 0usize, f64::INFINITY, f64::NEG_INFINITY);
    for v in values {
        sum += v;
        n += 1;
        lo = lo.min(v);
        hi = hi.max(v);
    }
    (sum / n as f64).clamp(lo, hi)
}

/// First generation from which the series stays within `tol` (relative) of
/// its final value.
pub fn stabilization_generation(series: &[f64], tol: f64) -> usize {
    assert!(!series.is_empty(), "stabilization of an empty series");
    let last = series[series.len() - 1];
    let band = tol * last.max(1e-9);
    let mut g = series.len() - 1;
    while g > 0 && (series[g - 1] - last).abs() <= band {
        g -= 1;
    }
    g
}

/// FOV whose final-generation aggregate is highest; ties go to the smaller FOV.
pub fn best_fov(aggregate: &AggregateSeries, choice: SeriesChoice) -> f64 {
    let mut best = (aggregate.fov_values[0], f64::NEG_INFINITY);
    for (f, &fov) in aggregate.fov_values.iter().enumerate() {
        let last = *aggregate.series(f, choice).last().expect("non-empty series");
        if last > best.1 {
            best = (fov, last);
        }
    }
    best.0
}

/// Dense row-major matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<f64>,
}

impl Matrix {
    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.data[row * self.cols + col]
    }

    pub fn row(&self, row: usize) -> &[f64] {
        &self.data[row * self.cols..(row + 1) * self.cols]
    }
}

/// Rows are FOVs in ascending order, columns are generations.
pub fn heatmap_matrix(aggregate: &AggregateSeries, choice: SeriesChoice) -> Matrix {
    let rows = aggregate.fov_values.len();
    let data = (0..rows).flat_map(|f| aggregate.series(f, choice).iter().copied()).collect();
    Matrix {
        rows,
        cols: aggregate.generations,
        data,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRow {
    pub fov_deg: f64,
    pub final_best_mean: f64,
    pub final_avg_mean: f64,
    pub stabilization_gen_best: usize,
    pub stabilization_gen_avg: usize,
}

pub fn summarize(aggregate: &AggregateSeries) -> Vec<SummaryRow> {
    aggregate
        .fov_values
        .iter()
        .enumerate()
        .map(|(f, &fov_deg)| {
            let best = aggregate.series(f, SeriesChoice::Best);
            let avg = aggregate.series(f, SeriesChoice::Average);
            SummaryRow {
                fov_deg,
                final_best_mean: best[best.len() - 1],
                final_avg_mean: avg[avg.len() - 1],
                stabilization_gen_best: stabilization_generation(best, STABILIZATION_TOL),
                stabilization_gen_avg: stabilization_generation(avg, STABILIZATION_TOL),
            }
        })
        .collect()
}
