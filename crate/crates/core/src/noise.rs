//! Static parameter fluctuations, thermal occupation and SPAM.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::density::{Basis, SpinDensity};
use crate::error::{Error, Result};
use crate::ion::{IonChainConfig, MSPulse};
use crate::propagator::{prepare_initial, reduced_density_x, DecoherenceKernel, MsEvolution};

pub const DEFAULT_GRID_POINTS: usize = 1000;

/// Grid points summed sequentially inside one parallel work item. Fixed so
/// the reduction order does not depend on the thread count.
const CHUNK: usize = 25;

const STOCHASTIC_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FluctuationTarget {
    /// Additive shift of the target mode frequency (σ in rad/s).
    TargetModeFreq,
    /// Common relative shift `Ω → Ω(1+Δ)` of every Rabi rate.
    RabiRateRelative,
}

/// A zero-mean Gaussian static fluctuation, averaged over a midpoint grid of
/// `grid_points` intervals spanning ±3σ.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GaussianFluctuation {
    pub target: FluctuationTarget,
    pub sigma: f64,
    pub grid_points: usize,
}

impl GaussianFluctuation {
    pub fn new(target: FluctuationTarget, sigma: f64, grid_points: usize) -> Result<Self> {
        let f = Self {
            target,
            sigma,
            grid_points,
        };
        f.validate()?;
        Ok(f)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.sigma >= 0.0 && self.sigma.is_finite()) {
            return Err(Error::invalid("fluctuation sigma must be finite and non-negative"));
        }
        if self.grid_points == 0 {
            return Err(Error::invalid("fluctuation grid needs at least one point"));
        }
        Ok(())
    }

    /// `(Δ_k, w_k)` with `Δ_k = −3σ + (k+½)·6σ/N` and weights proportional to
    /// the Gaussian density, normalized over the truncated grid.
    pub fn grid(&self) -> Vec<(f64, f64)> {
        if self.sigma == 0.0 || self.grid_points == 1 {
            return vec![(0.0, 1.0)];
        }
        let n = self.grid_points;
        let h = 6.0 * self.sigma / n as f64;
        let pts: Vec<f64> = (0..n)
            .map(|k| -3.0 * self.sigma + (k as f64 + 0.5) * h)
            .collect();
        let dens: Vec<f64> = pts
            .iter()
            .map(|d| (-0.5 * (d / self.sigma).powi(2)).exp())
            .collect();
        let total: f64 = dens.iter().sum();
        pts.into_iter()
            .zip(dens)
            .map(|(d, p)| (d, p / total))
            .collect()
    }
}

/// Measurement confusion model.
#[derive(Debug, Clone, PartialEq)]
pub enum SpamModel {
    /// Column-stochastic `M_{z',z} = P(z' | z)`.
    Matrix(DMatrix<f64>),
    /// Independent per-qubit flips with probability ε.
    BitFlip(f64),
}

impl SpamModel {
    pub fn matrix(&self, n: usize) -> Result<DMatrix<f64>> {
        match self {
            SpamModel::Matrix(m) => {
                check_stochastic(m)?;
                if m.nrows() != 1 << n {
                    return Err(Error::Dimension {
                        expected: 1 << n,
                        got: m.nrows(),
                    });
                }
                Ok(m.clone())
            }
            SpamModel::BitFlip(eps) => bitflip_spam_matrix(n, *eps),
        }
    }

    pub fn validate(&self, n: usize) -> Result<()> {
        match self {
            SpamModel::Matrix(_) => self.matrix(n).map(|_| ()),
            SpamModel::BitFlip(eps) => check_eps(*eps),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct NoiseConfig {
    pub mode_fluct: Option<GaussianFluctuation>,
    pub rabi_fluct: Option<GaussianFluctuation>,
    /// Thermal occupations: empty for ground state, one value for all modes,
    /// or one per mode.
    pub nbar: Vec<f64>,
    pub spam: Option<SpamModel>,
}

impl NoiseConfig {
    pub fn ideal() -> Self {
        Self::default()
    }

    /// Per-mode occupations for an `n`-mode chain.
    pub fn nbars(&self, n: usize) -> Result<Vec<f64>> {
        let v = match self.nbar.len() {
            0 => vec![0.0; n],
            1 => vec![self.nbar[0]; n],
            k if k == n => self.nbar.clone(),
            k => return Err(Error::Dimension { expected: n, got: k }),
        };
        if v.iter().any(|x| !(*x >= 0.0 && x.is_finite())) {
            return Err(Error::invalid("thermal occupations must be finite and non-negative"));
        }
        Ok(v)
    }

    pub fn validate(&self, n: usize) -> Result<()> {
        if let Some(f) = &self.mode_fluct {
            f.validate()?;
            if f.target != FluctuationTarget::TargetModeFreq {
                return Err(Error::invalid("mode_fluct must target the mode frequency"));
            }
        }
        if let Some(f) = &self.rabi_fluct {
            f.validate()?;
            if f.target != FluctuationTarget::RabiRateRelative {
                return Err(Error::invalid("rabi_fluct must target the Rabi rate"));
            }
        }
        self.nbars(n)?;
        if let Some(s) = &self.spam {
            s.validate(n)?;
        }
        Ok(())
    }
}

/// Splits `0..len` into fixed chunks, maps each chunk in parallel and sums
/// the partial results in chunk order.
fn ordered_sum<T, F>(len: usize, zero: impl Fn() -> T + Sync, f: F) -> Result<T>
where
    T: Send + std::ops::AddAssign<T>,
    F: Fn(usize, &mut T) -> Result<()> + Sync,
{
    let chunks: Vec<usize> = (0..len).step_by(CHUNK).collect();
    let partials: Vec<Result<T>> = chunks
        .into_par_iter()
        .map(|start| {
            let mut acc = zero();
            for k in start..(start + CHUNK).min(len) {
                f(k, &mut acc)?;
            }
            Ok(acc)
        })
        .collect();
    let mut total = zero();
    for p in partials {
        total += p?;
    }
    Ok(total)
}

/// Gaussian average `Σ_k w_k ρ(Δ_k)` of a deterministic simulation.
pub fn ensemble_average<F>(simulate: F, fluct: &GaussianFluctuation) -> Result<SpinDensity>
where
    F: Fn(f64) -> Result<SpinDensity> + Sync,
{
    fluct.validate()?;
    let grid = fluct.grid();
    if grid.len() == 1 {
        return simulate(0.0);
    }
    let first = simulate(grid[0].0)?;
    let (n, basis, dim) = (first.n(), first.basis(), first.dim());
    let sum = ordered_sum(
        grid.len(),
        || DMatrix::<Complex64>::zeros(dim, dim),
        |k, acc| {
            let (d, w) = grid[k];
            let rho = simulate(d)?;
            if rho.n() != n {
                return Err(Error::Dimension {
                    expected: n,
                    got: rho.n(),
                });
            }
            let rho = rho.to_basis(basis);
            *acc += rho.matrix() * Complex64::new(w, 0.0);
            Ok(())
        },
    )?;
    SpinDensity::from_matrix_unchecked(n, basis, sum)
}

/// Noisy MS evolution of `initial` for time `t`: Gaussian average over the
/// target-mode frequency (outer) and the common Rabi scale (inner), with
/// thermal occupations passed to the decoherence factor. Returns the pre-SPAM
/// density in the X basis.
///
/// The mode frequency shift keeps the Lamb-Dicke matrix fixed.
pub fn compose_fluctuations(
    initial: &SpinDensity,
    config: &IonChainConfig,
    pulse: &MSPulse,
    t: f64,
    noise: &NoiseConfig,
) -> Result<SpinDensity> {
    let n = config.n();
    noise.validate(n)?;
    let rho_x = prepare_initial(initial, n)?;
    compose_fluctuations_x(&rho_x, config, pulse, t, noise)
}

/// [`compose_fluctuations`] on an already-validated X-basis matrix.
pub fn compose_fluctuations_x(
    rho_x: &DMatrix<Complex64>,
    config: &IonChainConfig,
    pulse: &MSPulse,
    t: f64,
    noise: &NoiseConfig,
) -> Result<SpinDensity> {
    let n = config.n();
    let nbars = noise.nbars(n)?;
    let mode_grid = noise
        .mode_fluct
        .map(|f| f.grid())
        .unwrap_or_else(|| vec![(0.0, 1.0)]);
    let rabi_grid = noise
        .rabi_fluct
        .map(|f| f.grid())
        .unwrap_or_else(|| vec![(0.0, 1.0)]);
    if mode_grid.len() == 1 && rabi_grid.len() == 1 {
        return reduced_density_x(rho_x, config, pulse, t, &nbars);
    }
    let dim = rho_x.nrows();
    let target = pulse.target_mode;
    let zero = || DMatrix::<Complex64>::zeros(dim, dim);
    let sum = ordered_sum(mode_grid.len(), zero, |k, acc| {
        let (d, w_mode) = mode_grid[k];
        let shifted;
        let cfg = if d == 0.0 {
            config
        } else {
            shifted = config.with_shifted_mode(target, d)?;
            &shifted
        };
        let kernel = DecoherenceKernel::from_evolution(&MsEvolution::new(cfg, pulse, t)?, &nbars)?;
        if rabi_grid.len() == 1 {
            kernel.accumulate_scaled(rho_x, 1.0, w_mode, acc);
        } else {
            let partials: Vec<DMatrix<Complex64>> = rabi_grid
                .par_chunks(CHUNK)
                .map(|chunk| {
                    let mut part = zero();
                    kernel.accumulate_rabi_average(rho_x, chunk, 1.0, &mut part);
                    part
                })
                .collect();
            let mut inner = zero();
            for p in partials {
                inner += p;
            }
            *acc += inner * Complex64::new(w_mode, 0.0);
        }
        Ok(())
    })?;
    SpinDensity::from_matrix_unchecked(n, Basis::X, sum)
}

fn check_eps(eps: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&eps) {
        return Err(Error::invalid(format!("flip probability {eps} outside [0, 1]")));
    }
    Ok(())
}

/// `M_{z',z} = ε^h (1−ε)^{n−h}` with `h` the Hamming distance.
pub fn bitflip_spam_matrix(n: usize, eps: f64) -> Result<DMatrix<f64>> {
    check_eps(eps)?;
    let dim = 1usize << n;
    let pow_eps: Vec<f64> = (0..=n).map(|h| eps.powi(h as i32)).collect();
    let pow_keep: Vec<f64> = (0..=n).map(|h| (1.0 - eps).powi(h as i32)).collect();
    Ok(DMatrix::from_fn(dim, dim, |r, c| {
        let h = (r ^ c).count_ones() as usize;
        pow_eps[h] * pow_keep[n - h]
    }))
}

pub fn check_stochastic(m: &DMatrix<f64>) -> Result<()> {
    if m.nrows() != m.ncols() || !m.nrows().is_power_of_two() {
        return Err(Error::NotStochastic(format!(
            "expected a square 2^n matrix, got {}x{}",
            m.nrows(),
            m.ncols()
        )));
    }
    for (c, col) in m.column_iter().enumerate() {
        if col.iter().any(|x| !(-STOCHASTIC_TOL..=1.0 + STOCHASTIC_TOL).contains(x)) {
            return Err(Error::NotStochastic(format!("column {c} has entries outside [0, 1]")));
        }
        let s: f64 = col.iter().sum();
        if (s - 1.0).abs() > STOCHASTIC_TOL {
            return Err(Error::NotStochastic(format!("column {c} sums to {s}")));
        }
    }
    Ok(())
}

/// `M × P`.
pub fn spam_apply(spam: &SpamModel, probs: &[f64]) -> Result<Vec<f64>> {
    if !probs.len().is_power_of_two() {
        return Err(Error::Dimension {
            expected: probs.len().next_power_of_two(),
            got: probs.len(),
        });
    }
    let n = probs.len().trailing_zeros() as usize;
    match spam {
        SpamModel::Matrix(m) => {
            if m.ncols() != probs.len() {
                return Err(Error::Dimension {
                    expected: m.ncols(),
                    got: probs.len(),
                });
            }
            check_stochastic(m)?;
            Ok((m * nalgebra::DVector::from_column_slice(probs))
                .iter()
                .copied()
                .collect())
        }
        SpamModel::BitFlip(eps) => {
            check_eps(*eps)?;
            let mut p = probs.to_vec();
            for q in 0..n {
                let bit = 1usize << q;
                for k in 0..p.len() {
                    if k & bit == 0 {
                        let (a, b) = (p[k], p[k | bit]);
                        p[k] = (1.0 - eps) * a + eps * b;
                        p[k | bit] = eps * a + (1.0 - eps) * b;
                    }
                }
            }
            Ok(p)
        }
    }
}

/// Result of fitting a bit-flip model to a measured SPAM matrix.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpamFit {
    /// ε minimizing the trace-norm distance.
    pub eps: f64,
    /// `½‖M_exp − M(ε)‖_1` (half the sum of singular values) at `eps`.
    pub distance: f64,
    /// ε minimizing the sum of absolute element differences.
    pub eps_abs: f64,
    pub distance_abs: f64,
}

/// Scans ε over `[0, 0.5]` with step `resolution`.
pub fn fit_bitflip_epsilon(m_exp: &DMatrix<f64>, resolution: f64) -> Result<SpamFit> {
    check_stochastic(m_exp)?;
    if !(resolution > 0.0 && resolution <= 0.5) {
        return Err(Error::invalid("scan resolution must be in (0, 0.5]"));
    }
    let n = m_exp.nrows().trailing_zeros() as usize;
    let steps = (0.5 / resolution).round() as usize;
    let scores: Vec<(f64, f64, f64)> = (0..=steps)
        .into_par_iter()
        .map(|k| {
            let eps = (k as f64 * resolution).min(0.5);
            let diff = m_exp - bitflip_spam_matrix(n, eps).expect("eps in range");
            let trace = 0.5 * diff.clone().svd(false, false).singular_values.sum();
            let abs: f64 = diff.iter().map(|x| x.abs()).sum();
            (eps, trace, abs)
        })
        .collect();
    let best = |key: fn(&(f64, f64, f64)) -> f64| {
        scores
            .iter()
            .copied()
            .min_by(|a, b| key(a).total_cmp(&key(b)))
            .expect("non-empty scan")
    };
    let t = best(|s| s.1);
    let a = best(|s| s.2);
    Ok(SpamFit {
        eps: t.0,
        distance: t.1,
        eps_abs: a.0,
        distance_abs: a.2,
    })
}
