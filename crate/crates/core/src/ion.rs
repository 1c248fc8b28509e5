//! Ion-chain vibrational structure and the effective Ising couplings realized
//! by a bichromatic MS drive.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::constants::{HBAR, TWO_PI};
use crate::error::{Error, Result};

/// Column orthonormality tolerance for mode eigenvectors.
const ORTHONORMAL_TOL: f64 = 1e-12;

/// Two mode frequencies closer than this (rad/s, i.e. 1 Hz) are degenerate.
const DEGENERATE_TOL: f64 = TWO_PI;

/// Vibrational structure of an `n`-ion chain.
///
/// Column `m` of `eigenvectors` is the participation vector `b_{·,m}` of the
/// mode with angular frequency `mode_freqs[m]`; `lamb_dicke[(i, m)]` is
/// `η_{i,m}`.
#[derive(Debug, Clone, PartialEq)]
pub struct IonChainConfig {
    mode_freqs: Vec<f64>,
    eigenvectors: DMatrix<f64>,
    lamb_dicke: DMatrix<f64>,
}

impl IonChainConfig {
    /// Builds a config from explicit frequencies (rad/s), eigenvectors and
    /// Lamb-Dicke matrix.
    pub fn new(
        mode_freqs: Vec<f64>,
        eigenvectors: DMatrix<f64>,
        lamb_dicke: DMatrix<f64>,
    ) -> Result<Self> {
        let n = mode_freqs.len();
        if n == 0 {
            return Err(Error::invalid("chain needs at least one ion"));
        }
        check_frequencies(&mode_freqs)?;
        check_square("eigenvectors", &eigenvectors, n)?;
        check_square("lamb_dicke", &lamb_dicke, n)?;
        let gram = eigenvectors.transpose() * &eigenvectors;
        let dev = (gram - DMatrix::<f64>::identity(n, n)).amax();
        if !(dev <= ORTHONORMAL_TOL) {
            return Err(Error::invalid(format!(
                "eigenvector columns are not orthonormal (max deviation {dev:e})"
            )));
        }
        if lamb_dicke.iter().any(|x| !x.is_finite()) {
            return Err(Error::invalid("Lamb-Dicke matrix has non-finite entries"));
        }
        Ok(Self {
            mode_freqs,
            eigenvectors,
            lamb_dicke,
        })
    }

    /// Derives `η` from the eigenvectors, the beam wavevector difference
    /// `Δk` (rad/m) and the ion mass (kg).
    pub fn from_modes(
        mode_freqs: Vec<f64>,
        eigenvectors: DMatrix<f64>,
        wavevector: f64,
        ion_mass: f64,
    ) -> Result<Self> {
        let eta = lamb_dicke_matrix(&mode_freqs, &eigenvectors, wavevector, ion_mass)?;
        Self::new(mode_freqs, eigenvectors, eta)
    }

    /// Pairs user-supplied frequencies with ideal harmonic-chain eigenvectors.
    ///
    /// Eigenvectors are assigned by frequency rank: the highest frequency gets
    /// the COM vector, the lowest the zig-zag vector, whatever order the
    /// frequencies are listed in.
    pub fn with_ideal_eigenvectors(
        mode_freqs: Vec<f64>,
        wavevector: f64,
        ion_mass: f64,
    ) -> Result<Self> {
        let n = mode_freqs.len();
        if n == 0 {
            return Err(Error::invalid("chain needs at least one ion"));
        }
        check_frequencies(&mode_freqs)?;
        let ideal = ideal_chain_eigenvectors(n)?;
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| mode_freqs[b].total_cmp(&mode_freqs[a]));
        let mut b = DMatrix::zeros(n, n);
        for (rank, &m) in order.iter().enumerate() {
            b.set_column(m, &ideal.column(rank));
        }
        Self::from_modes(mode_freqs, b, wavevector, ion_mass)
    }

    pub fn n(&self) -> usize {
        self.mode_freqs.len()
    }

    pub fn mode_freqs(&self) -> &[f64] {
        &self.mode_freqs
    }

    pub fn eigenvectors(&self) -> &DMatrix<f64> {
        &self.eigenvectors
    }

    pub fn lamb_dicke(&self) -> &DMatrix<f64> {
        &self.lamb_dicke
    }

    /// Copy with mode `m` shifted by `delta` rad/s. `η` is held fixed.
    pub fn with_shifted_mode(&self, m: usize, delta: f64) -> Result<Self> {
        let mut out = self.clone();
        let w = out
            .mode_freqs
            .get_mut(m)
            .ok_or_else(|| Error::invalid(format!("mode {m} out of range")))?;
        *w += delta;
        if !(*w > 0.0) {
            return Err(Error::invalid(format!(
                "shifted mode {m} frequency is not positive"
            )));
        }
        Ok(out)
    }
}

fn check_square(name: &str, m: &DMatrix<f64>, n: usize) -> Result<()> {
    if m.nrows() != n || m.ncols() != n {
        return Err(Error::invalid(format!(
            "{name} must be {n}x{n}, got {}x{}",
            m.nrows(),
            m.ncols()
        )));
    }
    Ok(())
}

fn check_frequencies(freqs: &[f64]) -> Result<()> {
    for (m, &w) in freqs.iter().enumerate() {
        if !(w > 0.0 && w.is_finite()) {
            return Err(Error::invalid(format!(
                "mode {m} frequency must be positive and finite"
            )));
        }
    }
    for a in 0..freqs.len() {
        for b in a + 1..freqs.len() {
            if (freqs[a] - freqs[b]).abs() < DEGENERATE_TOL {
                return Err(Error::DegenerateModes {
                    first: a,
                    second: b,
                });
            }
        }
    }
    Ok(())
}

/// Bichromatic MS drive settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MSPulse {
    /// Bichromatic detuning `μ` (rad/s), absolute.
    pub mu: f64,
    /// Per-ion Rabi rates `Ω_i` (rad/s).
    pub rabi: Vec<f64>,
    /// Interaction time (s).
    pub duration: f64,
    /// Index of the mode the detuning is placed next to.
    pub target_mode: usize,
}

impl MSPulse {
    pub fn new(
        config: &IonChainConfig,
        mu: f64,
        rabi: Vec<f64>,
        duration: f64,
        target_mode: usize,
    ) -> Result<Self> {
        let pulse = Self {
            mu,
            rabi,
            duration,
            target_mode,
        };
        pulse.validate(config)?;
        Ok(pulse)
    }

    /// Uniform illumination with `μ = ω_{m_t} + detuning`.
    pub fn uniform(
        config: &IonChainConfig,
        target_mode: usize,
        detuning: f64,
        rabi: f64,
        duration: f64,
    ) -> Result<Self> {
        let w = *config
            .mode_freqs()
            .get(target_mode)
            .ok_or_else(|| Error::invalid(format!("target mode {target_mode} out of range")))?;
        Self::new(
            config,
            w + detuning,
            vec![rabi; config.n()],
            duration,
            target_mode,
        )
    }

    pub fn validate(&self, config: &IonChainConfig) -> Result<()> {
        let n = config.n();
        if self.target_mode >= n {
            return Err(Error::invalid(format!(
                "target mode {} out of range for {n} modes",
                self.target_mode
            )));
        }
        if self.rabi.len() != n {
            return Err(Error::Dimension {
                expected: n,
                got: self.rabi.len(),
            });
        }
        if self.rabi.iter().any(|&r| !(r >= 0.0 && r.is_finite())) {
            return Err(Error::invalid("Rabi rates must be finite and non-negative"));
        }
        if !(self.duration >= 0.0 && self.duration.is_finite()) {
            return Err(Error::invalid("duration must be finite and non-negative"));
        }
        if !(self.mu > 0.0 && self.mu.is_finite()) {
            return Err(Error::invalid("detuning mu must be positive and finite"));
        }
        let freqs = config.mode_freqs();
        let to_target = (self.mu - freqs[self.target_mode]).abs();
        for (m, &w) in freqs.iter().enumerate() {
            if m != self.target_mode && (self.mu - w).abs() <= to_target {
                return Err(Error::invalid(format!(
                    "detuning is not closest to target mode {} (mode {m} is as close)",
                    self.target_mode
                )));
            }
        }
        Ok(())
    }

    /// Detuning from the target mode, `μ − ω_{m_t}`.
    pub fn detuning(&self, config: &IonChainConfig) -> f64 {
        self.mu - config.mode_freqs()[self.target_mode]
    }

    pub fn with_rabi(&self, rabi: f64) -> Self {
        Self {
            rabi: vec![rabi; self.rabi.len()],
            ..self.clone()
        }
    }

    pub fn with_duration(&self, duration: f64) -> Self {
        Self {
            duration,
            ..self.clone()
        }
    }
}

/// Transverse normal modes of an ideal linear chain.
#[derive(Debug, Clone)]
pub struct NormalModes {
    /// Angular frequencies (rad/s), descending.
    pub freqs: Vec<f64>,
    /// Orthonormal participation vectors, one column per mode.
    pub eigenvectors: DMatrix<f64>,
    /// Dimensionless equilibrium positions in units of the axial length scale.
    pub positions: Vec<f64>,
    /// Transverse dynamical matrix in units of `ω_z²`.
    pub dynamical_matrix: DMatrix<f64>,
}

/// Equilibrium positions of `n` ions minimizing
/// `Σ u_i²/2 + Σ_{i<j} 1/|u_i − u_j|` (lengths in units of
/// `(e²/(4πε₀ M ω_z²))^{1/3}`).
pub fn equilibrium_positions(n: usize) -> Result<Vec<f64>> {
    if n == 0 {
        return Err(Error::invalid("chain needs at least one ion"));
    }
    let energy = |u: &DVector<f64>| -> f64 {
        let mut e = 0.5 * u.norm_squared();
        for i in 0..n {
            for j in i + 1..n {
                e += 1.0 / (u[j] - u[i]);
            }
        }
        e
    };
    let mut u = DVector::from_fn(n, |i, _| i as f64 - (n as f64 - 1.0) / 2.0);
    for _ in 0..200 {
        let mut grad = u.clone();
        let mut hess = DMatrix::<f64>::identity(n, n);
        for i in 0..n {
            for j in 0..n {
                if i == j {
                    continue;
                }
                let d = u[i] - u[j];
                grad[i] -= d.signum() / (d * d);
                let c = 2.0 / d.abs().powi(3);
                hess[(i, i)] += c;
                hess[(i, j)] -= c;
            }
        }
        if grad.amax() < 1e-14 {
            return Ok(u.iter().copied().collect());
        }
        let step = hess
            .cholesky()
            .ok_or_else(|| Error::Optimization("axial Hessian not positive definite".into()))?
            .solve(&grad);
        let e0 = energy(&u);
        let mut scale = 1.0;
        loop {
            let trial = &u - &step * scale;
            let ordered = trial.as_slice().windows(2).all(|w| w[1] > w[0]);
            if ordered && energy(&trial) <= e0 {
                u = trial;
                break;
            }
            scale *= 0.5;
            if scale < 1e-12 {
                return Ok(u.iter().copied().collect());
            }
        }
    }
    Err(Error::Optimization(
        "equilibrium positions did not converge".into(),
    ))
}

/// Transverse Coulomb coupling matrix `A` with `A_ij = 1/|u_i−u_j|³` off the
/// diagonal and zero row sums. The transverse dynamical matrix in units of
/// `ω_z²` is `(ω_r/ω_z)²·I + A`.
fn coulomb_coupling(positions: &[f64]) -> DMatrix<f64> {
    let n = positions.len();
    let mut a = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            if i != j {
                let c = 1.0 / (positions[i] - positions[j]).abs().powi(3);
                a[(i, j)] = c;
                a[(i, i)] -= c;
            }
        }
    }
    a
}

/// Eigen-decomposition sorted by descending eigenvalue with the sign
/// convention: positive component sum, or positive leading component when
/// the sum vanishes.
fn sorted_eigen(m: DMatrix<f64>) -> (Vec<f64>, DMatrix<f64>) {
    let n = m.nrows();
    let eig = SymmetricEigen::new(m);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let values = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let mut vecs = DMatrix::zeros(n, n);
    for (col, &k) in order.iter().enumerate() {
        let mut v = eig.eigenvectors.column(k).clone_owned();
        let sum: f64 = v.iter().sum();
        let flip = if sum.abs() > 1e-9 {
            sum < 0.0
        } else {
            v.iter().find(|x| x.abs() > 1e-9).is_some_and(|x| *x < 0.0)
        };
        if flip {
            v.neg_mut();
        }
        vecs.set_column(col, &v);
    }
    (values, vecs)
}

/// Transverse mode eigenvectors of an ideal harmonic chain, COM first and
/// zig-zag last. They do not depend on the trap frequencies.
pub fn ideal_chain_eigenvectors(n: usize) -> Result<DMatrix<f64>> {
    let u = equilibrium_positions(n)?;
    Ok(sorted_eigen(coulomb_coupling(&u)).1)
}

/// Transverse normal modes for radial and axial COM frequencies (rad/s).
pub fn transverse_normal_modes(
    n: usize,
    radial_com_freq: f64,
    axial_com_freq: f64,
) -> Result<NormalModes> {
    if !(radial_com_freq > 0.0 && axial_com_freq > 0.0) {
        return Err(Error::invalid("trap frequencies must be positive"));
    }
    let positions = equilibrium_positions(n)?;
    let ratio = radial_com_freq / axial_com_freq;
    let mut k = coulomb_coupling(&positions);
    for i in 0..n {
        k[(i, i)] += ratio * ratio;
    }
    let (values, eigenvectors) = sorted_eigen(k.clone());
    for (m, &lambda) in values.iter().enumerate() {
        if lambda <= 0.0 {
            return Err(Error::UnstableChain {
                mode: m,
                eigenvalue: lambda,
            });
        }
    }
    Ok(NormalModes {
        freqs: values.iter().map(|l| axial_com_freq * l.sqrt()).collect(),
        eigenvectors,
        positions,
        dynamical_matrix: k,
    })
}

/// `η_{i,m} = b_{i,m}·Δk·√(ħ/(2Mω_m))`.
pub fn lamb_dicke_matrix(
    mode_freqs: &[f64],
    eigenvectors: &DMatrix<f64>,
    wavevector: f64,
    ion_mass: f64,
) -> Result<DMatrix<f64>> {
    let n = mode_freqs.len();
    check_square("eigenvectors", eigenvectors, n)?;
    if !(wavevector > 0.0 && ion_mass > 0.0) {
        return Err(Error::invalid("wavevector and ion mass must be positive"));
    }
    if mode_freqs.iter().any(|&w| !(w > 0.0)) {
        return Err(Error::invalid("mode frequencies must be positive"));
    }
    Ok(DMatrix::from_fn(n, n, |i, m| {
        eigenvectors[(i, m)] * wavevector * (HBAR / (2.0 * ion_mass * mode_freqs[m])).sqrt()
    }))
}

pub(crate) fn check_detuning(config: &IonChainConfig, pulse: &MSPulse) -> Result<()> {
    if pulse.mu == 0.0 {
        return Err(Error::Singular("detuning mu is zero".into()));
    }
    for (m, &w) in config.mode_freqs().iter().enumerate() {
        if (pulse.mu - w).abs() <= 1e-12 * w {
            return Err(Error::Singular(format!(
                "detuning coincides with mode {m} frequency"
            )));
        }
    }
    Ok(())
}

/// Ising couplings restricted to a subset of modes.
pub fn ising_couplings_from_modes(
    config: &IonChainConfig,
    pulse: &MSPulse,
    modes: &[usize],
) -> Result<DMatrix<f64>> {
    check_detuning(config, pulse)?;
    let n = config.n();
    if pulse.rabi.len() != n {
        return Err(Error::Dimension {
            expected: n,
            got: pulse.rabi.len(),
        });
    }
    let eta = config.lamb_dicke();
    let mu = pulse.mu;
    let mut j = DMatrix::zeros(n, n);
    for &m in modes {
        let w = config.mode_freqs()[m];
        let k = w / (mu * mu - w * w);
        for a in 0..n {
            for b in a + 1..n {
                j[(a, b)] += eta[(a, m)] * eta[(b, m)] * k;
            }
        }
    }
    for a in 0..n {
        for b in a + 1..n {
            let v = j[(a, b)] * pulse.rabi[a] * pulse.rabi[b];
            j[(a, b)] = v;
            j[(b, a)] = v;
        }
    }
    Ok(j)
}

/// `J_{i,j} = Ω_iΩ_j Σ_m η_{i,m}η_{j,m} ω_m/(μ² − ω_m²)` (rad/s), symmetric
/// with zero diagonal.
pub fn ising_couplings(config: &IonChainConfig, pulse: &MSPulse) -> Result<DMatrix<f64>> {
    let modes: Vec<usize> = (0..config.n()).collect();
    ising_couplings_from_modes(config, pulse, &modes)
}

/// Largest coupling magnitude over distinct pairs.
pub fn max_coupling(j: &DMatrix<f64>) -> f64 {
    let n = j.nrows();
    let mut best = 0.0f64;
    for a in 0..n {
        for b in 0..n {
            if a != b {
                best = best.max(j[(a, b)].abs());
            }
        }
    }
    best
}

/// Normalizes couplings into dimensionless MaxCut weights `J/J_max`.
pub fn maxcut_weights(j: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let jmax = max_coupling(j);
    if !(jmax > 0.0) || !jmax.is_finite() {
        return Err(Error::DegenerateInstance(
            "all couplings vanish".into(),
        ));
    }
    let mut w = j / jmax;
    w.fill_diagonal(0.0);
    Ok(w)
}

/// Time for the target mode to close one phase-space loop,
/// `2π/|μ − ω_{m_t}|`.
pub fn loop_time(pulse: &MSPulse, config: &IonChainConfig) -> Result<f64> {
    let det = pulse.detuning(config).abs();
    if det == 0.0 {
        return Err(Error::Singular(
            "detuning coincides with the target mode".into(),
        ));
    }
    Ok(TWO_PI / det)
}
