//! Finite-sampling error bars and simulation-versus-experiment metrics.

use rand::Rng;
use rand_distr::{Binomial, Distribution};
use serde::{Deserialize, Serialize};

use crate::density::SpinDensity;
use crate::error::{Error, Result};
use crate::qaoa::MaxCutInstance;

/// `√(p(1−p)/S)`.
pub fn stderr_prob(p: f64, shots: u64) -> f64 {
    let p = p.clamp(0.0, 1.0);
    (p * (1.0 - p) / shots.max(1) as f64).sqrt()
}

/// First and second moments `(Σ p_z C_z, Σ p_z C_z²)`.
pub fn cost_moments(probs: &[f64], costs: &[f64]) -> (f64, f64) {
    probs.iter().zip(costs).fold((0.0, 0.0), |(m1, m2), (p, c)| {
        (m1 + p * c, m2 + p * c * c)
    })
}

/// `√((⟨C²⟩ − ⟨C⟩²)/S)` from an outcome distribution.
pub fn stderr_cost_from_probs(probs: &[f64], costs: &[f64], shots: u64) -> Result<f64> {
    if probs.len() != costs.len() {
        return Err(Error::Dimension {
            expected: costs.len(),
            got: probs.len(),
        });
    }
    let (m1, m2) = cost_moments(probs, costs);
    Ok(((m2 - m1 * m1).max(0.0) / shots.max(1) as f64).sqrt())
}

/// Standard error of `⟨C⟩ = Tr(ρC)` for `S` shots.
pub fn stderr_cost(rho: &SpinDensity, instance: &MaxCutInstance, shots: u64) -> Result<f64> {
    stderr_cost_from_probs(&rho.probabilities(), instance.costs(), shots)
}

/// Paired simulated and experimental means with per-point variances.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObservationSet {
    pub values: Vec<f64>,
    pub exp_values: Vec<f64>,
    pub variances: Vec<f64>,
    pub shots: u64,
}

impl ObservationSet {
    pub fn new(
        values: Vec<f64>,
        exp_values: Vec<f64>,
        variances: Vec<f64>,
        shots: u64,
    ) -> Result<Self> {
        if exp_values.len() != values.len() {
            return Err(Error::Dimension {
                expected: values.len(),
                got: exp_values.len(),
            });
        }
        if variances.len() != values.len() {
            return Err(Error::Dimension {
                expected: values.len(),
                got: variances.len(),
            });
        }
        Ok(Self {
            values,
            exp_values,
            variances,
            shots,
        })
    }

    /// Probabilities compared point by point, with binomial variances taken
    /// from the simulated values.
    pub fn from_probabilities(sim: Vec<f64>, exp: Vec<f64>, shots: u64) -> Result<Self> {
        let variances = sim.iter().map(|p| stderr_prob(*p, shots).powi(2)).collect();
        Self::new(sim, exp, variances, shots)
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn residuals(&self) -> Vec<f64> {
        self.values
            .iter()
            .zip(&self.exp_values)
            .map(|(s, e)| s - e)
            .collect()
    }

    /// Drops points with zero variance whose simulated and experimental
    /// values agree exactly, which carry no information.
    pub fn without_exact_zero_variance(&self) -> Self {
        let keep: Vec<usize> = (0..self.len())
            .filter(|&k| !(self.variances[k] == 0.0 && self.values[k] == self.exp_values[k]))
            .collect();
        Self {
            values: keep.iter().map(|&k| self.values[k]).collect(),
            exp_values: keep.iter().map(|&k| self.exp_values[k]).collect(),
            variances: keep.iter().map(|&k| self.variances[k]).collect(),
            shots: self.shots,
        }
    }
}

/// `(1/A) Σ (sim − exp)²/var` with no fit-parameter correction.
pub fn chi2_red(obs: &ObservationSet) -> Result<f64> {
    if obs.is_empty() {
        return Err(Error::invalid("no points to compare"));
    }
    let mut total = 0.0;
    for (k, ((s, e), v)) in obs
        .values
        .iter()
        .zip(&obs.exp_values)
        .zip(&obs.variances)
        .enumerate()
    {
        if !(*v > 0.0) {
            return Err(Error::ZeroVariance { index: k });
        }
        total += (s - e).powi(2) / v;
    }
    Ok(total / obs.len() as f64)
}

/// Unweighted root-mean-square deviation.
pub fn rmse(obs: &ObservationSet) -> Result<f64> {
    if obs.is_empty() {
        return Err(Error::invalid("no points to compare"));
    }
    let ss: f64 = obs.residuals().iter().map(|r| r * r).sum();
    Ok((ss / obs.len() as f64).sqrt())
}

/// Multinomial shot counts drawn as a chain of conditional binomials.
pub fn sample_counts<R: Rng + ?Sized>(probs: &[f64], shots: u64, rng: &mut R) -> Vec<u64> {
    let mut counts = vec![0u64; probs.len()];
    let mut remaining = shots;
    let mut mass = 1.0f64;
    for (k, &p) in probs.iter().enumerate() {
        if remaining == 0 {
            break;
        }
        if k + 1 == probs.len() {
            counts[k] = remaining;
            break;
        }
        let p = p.max(0.0);
        let q = if mass > 0.0 { (p / mass).clamp(0.0, 1.0) } else { 1.0 };
        let draw = Binomial::new(remaining, q)
            .expect("probability in [0, 1]")
            .sample(rng);
        counts[k] = draw;
        remaining -= draw;
        mass -= p;
    }
    counts
}

/// Empirical frequencies from counts.
pub fn frequencies(counts: &[u64]) -> Vec<f64> {
    let total: u64 = counts.iter().sum();
    counts
        .iter()
        .map(|&c| c as f64 / total.max(1) as f64)
        .collect()
}
