//! Weighted MaxCut, ideal p-layer QAOA, and the analog MS realization.

mod analog;
mod calibrate;
mod heatmap;

pub use analog::{analog_qaoa_density, compile_gamma, AnalogQaoa, AnalogSchedule};
pub use calibrate::{calibrate_rabi_mp, golden_section_max, Calibration, CalibrationMode, ScanWindow};
pub use heatmap::{heatmap_sweep, HeatmapGrid, Provenance, Sampling};

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::density::{apply_global_unitary_to_state, rx, spins};
use crate::error::{Error, Result};

/// Weighted MaxCut instance with cached costs of every bitstring.
#[derive(Debug, Clone, PartialEq)]
pub struct MaxCutInstance {
    weights: DMatrix<f64>,
    costs: Vec<f64>,
    c_max: f64,
    c_min: f64,
}

impl MaxCutInstance {
    /// `weights` must be symmetric with zero diagonal.
    pub fn new(weights: DMatrix<f64>) -> Result<Self> {
        let n = weights.nrows();
        if n == 0 || weights.ncols() != n {
            return Err(Error::invalid("weights must be a non-empty square matrix"));
        }
        if n > 20 {
            return Err(Error::invalid("instances above 20 vertices are not supported"));
        }
        for i in 0..n {
            if weights[(i, i)] != 0.0 {
                return Err(Error::invalid("weight diagonal must be zero"));
            }
            for j in 0..i {
                if (weights[(i, j)] - weights[(j, i)]).abs() > 1e-12 {
                    return Err(Error::invalid(format!("weights not symmetric at ({i}, {j})")));
                }
            }
        }
        if weights.iter().any(|w| !w.is_finite()) {
            return Err(Error::invalid("weights must be finite"));
        }
        let costs: Vec<f64> = (0..1usize << n)
            .map(|z| cut_value(&weights, &spins(z, n).collect::<Vec<_>>()))
            .collect();
        let c_max = costs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let c_min = costs.iter().copied().fold(f64::INFINITY, f64::min);
        Ok(Self {
            weights,
            costs,
            c_max,
            c_min,
        })
    }

    pub fn n(&self) -> usize {
        self.weights.nrows()
    }

    pub fn weights(&self) -> &DMatrix<f64> {
        &self.weights
    }

    /// `C(z)` indexed by Z-basis bitstring (bit 0 ↦ spin +1).
    pub fn costs(&self) -> &[f64] {
        &self.costs
    }

    pub fn c_max(&self) -> f64 {
        self.c_max
    }

    pub fn c_min(&self) -> f64 {
        self.c_min
    }

    /// `Σ_z P(z) C(z)`.
    pub fn expectation(&self, probs: &[f64]) -> f64 {
        probs.iter().zip(&self.costs).map(|(p, c)| p * c).sum()
    }
}

fn cut_value(w: &DMatrix<f64>, z: &[f64]) -> f64 {
    let n = z.len();
    let mut c = 0.0;
    for i in 0..n {
        for j in i + 1..n {
            c += w[(i, j)] * (1.0 - z[i] * z[j]);
        }
    }
    0.5 * c
}

/// `½ Σ_{i<j} w_ij (1 − z_i z_j)` for a string of ±1 spins.
pub fn cost_of_bitstring(instance: &MaxCutInstance, z: &[i8]) -> Result<f64> {
    if z.len() != instance.n() {
        return Err(Error::Dimension {
            expected: instance.n(),
            got: z.len(),
        });
    }
    if z.iter().any(|s| *s != 1 && *s != -1) {
        return Err(Error::invalid("spins must be +1 or -1"));
    }
    let z: Vec<f64> = z.iter().map(|s| *s as f64).collect();
    Ok(cut_value(instance.weights(), &z))
}

/// `Π_l e^{−iβ_l B} e^{−iγ_l C} |+⟩ⁿ` as Z-basis amplitudes.
pub fn ideal_qaoa_state(
    instance: &MaxCutInstance,
    gammas: &[f64],
    betas: &[f64],
) -> Result<Vec<Complex64>> {
    if gammas.len() != betas.len() || gammas.is_empty() {
        return Err(Error::invalid("need equal, non-zero numbers of gamma and beta angles"));
    }
    let n = instance.n();
    let dim = 1usize << n;
    let amp = Complex64::new((dim as f64).sqrt().recip(), 0.0);
    let mut psi = vec![amp; dim];
    for (&g, &b) in gammas.iter().zip(betas) {
        for (a, c) in psi.iter_mut().zip(instance.costs()) {
            *a *= Complex64::from_polar(1.0, -g * c);
        }
        apply_global_unitary_to_state(&mut psi, n, &rx(2.0 * b));
    }
    Ok(psi)
}

/// p = 1 ideal approximation ratio.
pub fn ideal_ratio(instance: &MaxCutInstance, gamma: f64, beta: f64) -> Result<f64> {
    let psi = ideal_qaoa_state(instance, &[gamma], &[beta])?;
    let probs: Vec<f64> = psi.iter().map(|a| a.norm_sqr()).collect();
    approximation_ratio(instance.expectation(&probs), instance)
}

/// `(⟨C⟩ − C_min)/(C_max − C_min)`.
pub fn approximation_ratio(cost_expectation: f64, instance: &MaxCutInstance) -> Result<f64> {
    let span = instance.c_max - instance.c_min;
    if !(span > 0.0) {
        return Err(Error::DegenerateInstance(
            "C_max equals C_min".into(),
        ));
    }
    let slack = 1e-9 * span.max(1.0);
    if cost_expectation < instance.c_min - slack || cost_expectation > instance.c_max + slack {
        return Err(Error::invalid(format!(
            "cost expectation {cost_expectation} outside [{}, {}]",
            instance.c_min, instance.c_max
        )));
    }
    Ok((cost_expectation - instance.c_min) / span)
}
