use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{approximation_ratio, AnalogQaoa};
use crate::error::{Error, Result};
use crate::noise::NoiseConfig;
use crate::stats::{frequencies, sample_counts, stderr_cost_from_probs};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    IdealSim,
    NoisySim,
    Experiment,
}

/// How each pixel's ratio is estimated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "mode")]
pub enum Sampling {
    /// `⟨C⟩ = Tr(ρC)` with the standard error expected for `shots`.
    ExactExpectation,
    /// Multinomial shots per pixel. Pixel `k` draws from a ChaCha8 stream
    /// `k` seeded with `seed`.
    Sampled { seed: u64 },
}

/// Approximation ratios over a `(γ, β)` grid, stored γ-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HeatmapGrid {
    pub gamma_axis: Vec<f64>,
    pub beta_axis: Vec<f64>,
    pub values: Vec<f64>,
    pub stderr: Vec<f64>,
    pub shots: u64,
    pub provenance: Provenance,
}

impl HeatmapGrid {
    pub fn new(
        gamma_axis: Vec<f64>,
        beta_axis: Vec<f64>,
        values: Vec<f64>,
        stderr: Vec<f64>,
        shots: u64,
        provenance: Provenance,
    ) -> Result<Self> {
        check_axis("gamma", &gamma_axis)?;
        check_axis("beta", &beta_axis)?;
        let cells = gamma_axis.len() * beta_axis.len();
        if values.len() != cells || stderr.len() != cells {
            return Err(Error::Dimension {
                expected: cells,
                got: values.len().min(stderr.len()),
            });
        }
        Ok(Self {
            gamma_axis,
            beta_axis,
            values,
            stderr,
            shots,
            provenance,
        })
    }

    pub fn index(&self, gi: usize, bi: usize) -> usize {
        gi * self.beta_axis.len() + bi
    }

    pub fn get(&self, gi: usize, bi: usize) -> f64 {
        self.values[self.index(gi, bi)]
    }

    /// `(γ index, β index, r)` of the largest ratio; ties go to the first.
    pub fn argmax(&self) -> (usize, usize, f64) {
        let mut best = 0;
        for k in 1..self.values.len() {
            if self.values[k] > self.values[best] {
                best = k;
            }
        }
        let nb = self.beta_axis.len();
        (best / nb, best % nb, self.values[best])
    }

    pub fn min_value(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// Cell whose axes values are nearest to `(gamma, beta)`.
    pub fn nearest(&self, gamma: f64, beta: f64) -> (usize, usize) {
        (nearest(&self.gamma_axis, gamma), nearest(&self.beta_axis, beta))
    }
}

fn nearest(axis: &[f64], x: f64) -> usize {
    let mut best = 0;
    for (k, v) in axis.iter().enumerate() {
        if (v - x).abs() < (axis[best] - x).abs() {
            best = k;
        }
    }
    best
}

fn check_axis(name: &str, axis: &[f64]) -> Result<()> {
    if axis.is_empty() {
        return Err(Error::invalid(format!("{name} axis is empty")));
    }
    if axis.iter().any(|x| !x.is_finite()) || axis.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::invalid(format!("{name} axis must be finite and strictly increasing")));
    }
    Ok(())
}

/// Sweeps the analog pipeline over a `(γ, β)` grid. The cost layer is
/// computed once per γ and shared across β.
pub fn heatmap_sweep(
    pipeline: &AnalogQaoa,
    noise: &NoiseConfig,
    gamma_grid: &[f64],
    beta_grid: &[f64],
    shots: u64,
    sampling: Sampling,
) -> Result<HeatmapGrid> {
    check_axis("gamma", gamma_grid)?;
    check_axis("beta", beta_grid)?;
    if gamma_grid[0] < 0.0 {
        return Err(Error::invalid("gamma axis must be non-negative"));
    }
    if shots == 0 {
        return Err(Error::invalid("shots must be positive"));
    }
    noise.validate(pipeline.config().n())?;
    let instance = pipeline.instance();
    let span = instance.c_max() - instance.c_min();
    let nb = beta_grid.len();
    let rows: Vec<Result<Vec<(f64, f64)>>> = gamma_grid
        .par_iter()
        .enumerate()
        .map(|(gi, &gamma)| {
            let schedule = pipeline.schedule(gamma)?;
            let layer = pipeline.cost_layer(&schedule, noise)?;
            beta_grid
                .iter()
                .enumerate()
                .map(|(bi, &beta)| {
                    let probs = pipeline.measure(&pipeline.mix(&layer, beta), noise)?;
                    let probs = match sampling {
                        Sampling::ExactExpectation => probs,
                        Sampling::Sampled { seed } => {
                            let mut rng = ChaCha8Rng::seed_from_u64(seed);
                            rng.set_stream((gi * nb + bi) as u64);
                            frequencies(&sample_counts(&probs, shots, &mut rng))
                        }
                    };
                    let r = approximation_ratio(instance.expectation(&probs), instance)?;
                    let dc = stderr_cost_from_probs(&probs, instance.costs(), shots)?;
                    Ok((r, dc / span))
                })
                .collect()
        })
        .collect();
    let mut values = Vec::with_capacity(gamma_grid.len() * nb);
    let mut stderr = Vec::with_capacity(values.capacity());
    for row in rows {
        for (r, e) in row? {
            values.push(r);
            stderr.push(e);
        }
    }
    let noiseless = noise.mode_fluct.is_none()
        && noise.rabi_fluct.is_none()
        && noise.spam.is_none()
        && noise.nbar.iter().all(|x| *x == 0.0);
    let provenance = if noiseless {
        Provenance::IdealSim
    } else {
        Provenance::NoisySim
    };
    HeatmapGrid::new(
        gamma_grid.to_vec(),
        beta_grid.to_vec(),
        values,
        stderr,
        shots,
        provenance,
    )
}
