//! Closed-form MS evolution in the X-string decomposition.
//!
//! The propagator is diagonal in the X eigenbasis: every string `x` picks up
//! a phase `e^{−iχ(t,x)}` and drives each mode to the coherent state
//! `α_m(t,x) = Σ_i x_i α_{i,m}(t)`. Tracing out the modes leaves a Hadamard
//! (element-wise) product of the initial density matrix with a kernel built
//! from branch phases and coherent-state overlaps.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::density::{spins, Basis, SpinDensity};
use crate::error::{Error, Result};
use crate::ion::{check_detuning, IonChainConfig, MSPulse};

const I: Complex64 = Complex64::new(0.0, 1.0);

/// Pairwise phases and per-ion displacements at time `time`.
#[derive(Debug, Clone)]
pub struct MsEvolution {
    /// `χ_{i,j}(t)`, symmetric with zero diagonal.
    pub chi: DMatrix<f64>,
    /// `α_{i,m}(t)`, rows are ions and columns modes.
    pub alpha: DMatrix<Complex64>,
    pub pulse: MSPulse,
    pub time: f64,
}

impl MsEvolution {
    pub fn new(config: &IonChainConfig, pulse: &MSPulse, t: f64) -> Result<Self> {
        Ok(Self {
            chi: geometric_phase(config, pulse, t)?,
            alpha: displacements(config, pulse, t)?,
            pulse: pulse.clone(),
            time: t,
        })
    }
}

fn check_inputs(config: &IonChainConfig, pulse: &MSPulse, t: f64) -> Result<()> {
    if pulse.rabi.len() != config.n() {
        return Err(Error::Dimension {
            expected: config.n(),
            got: pulse.rabi.len(),
        });
    }
    if !t.is_finite() {
        return Err(Error::invalid("time must be finite"));
    }
    check_detuning(config, pulse)
}

/// Geometric phase
/// `χ_{i,j}(t) = −Ω_iΩ_j Σ_m η_{i,m}η_{j,m}/(μ²−ω_m²) ·
/// [μ sin((μ−ω_m)t)/(μ−ω_m) − μ sin((μ+ω_m)t)/(μ+ω_m) + ω_m sin(2μt)/(2μ) − ω_m t]`.
pub fn geometric_phase(config: &IonChainConfig, pulse: &MSPulse, t: f64) -> Result<DMatrix<f64>> {
    check_inputs(config, pulse, t)?;
    let n = config.n();
    let eta = config.lamb_dicke();
    let mu = pulse.mu;
    let mut chi = DMatrix::zeros(n, n);
    for (m, &w) in config.mode_freqs().iter().enumerate() {
        let bracket = mu * ((mu - w) * t).sin() / (mu - w) - mu * ((mu + w) * t).sin() / (mu + w)
            + w * (2.0 * mu * t).sin() / (2.0 * mu)
            - w * t;
        let k = -bracket / (mu * mu - w * w);
        for i in 0..n {
            for j in i + 1..n {
                chi[(i, j)] += eta[(i, m)] * eta[(j, m)] * k;
            }
        }
    }
    for i in 0..n {
        for j in i + 1..n {
            let v = chi[(i, j)] * pulse.rabi[i] * pulse.rabi[j];
            chi[(i, j)] = v;
            chi[(j, i)] = v;
        }
    }
    Ok(chi)
}

/// Displacements
/// `α_{i,m}(t) = −iη_{i,m}Ω_i/(μ²−ω_m²) · [μ − e^{iω_m t}(μ cos μt − iω_m sin μt)]`.
pub fn displacements(
    config: &IonChainConfig,
    pulse: &MSPulse,
    t: f64,
) -> Result<DMatrix<Complex64>> {
    check_inputs(config, pulse, t)?;
    let n = config.n();
    let eta = config.lamb_dicke();
    let mu = pulse.mu;
    let (smu, cmu) = (mu * t).sin_cos();
    let mut alpha = DMatrix::zeros(n, n);
    for (m, &w) in config.mode_freqs().iter().enumerate() {
        let rot = Complex64::from_polar(1.0, w * t);
        let shape = (Complex64::new(mu, 0.0) - rot * Complex64::new(mu * cmu, -w * smu))
            * (-I / (mu * mu - w * w));
        for i in 0..n {
            alpha[(i, m)] = shape * (eta[(i, m)] * pulse.rabi[i]);
        }
    }
    Ok(alpha)
}

/// `⟨b|a⟩ = exp(i·Im[a b*])·exp(−|a−b|²/2)` for coherent states.
pub fn coherent_overlap(a: Complex64, b: Complex64) -> Complex64 {
    (I * (a * b.conj()).im - (a - b).norm_sqr() / 2.0).exp()
}

/// Per-mode decoherence factor for a thermal initial state,
/// `exp(i·Im[α α'*])·exp(−(2ν̄+1)|α−α'|²/2)`.
pub fn thermal_decoherence(alpha: Complex64, alpha_prime: Complex64, nbar: f64) -> Result<Complex64> {
    check_nbar(nbar)?;
    Ok(thermal_factor(alpha, alpha_prime, nbar))
}

#[inline]
fn thermal_factor(a: Complex64, b: Complex64, nbar: f64) -> Complex64 {
    (I * (a * b.conj()).im - (2.0 * nbar + 1.0) * (a - b).norm_sqr() / 2.0).exp()
}

fn check_nbar(nbar: f64) -> Result<()> {
    if !(nbar >= 0.0 && nbar.is_finite()) {
        return Err(Error::invalid(format!(
            "thermal occupation {nbar} must be finite and non-negative"
        )));
    }
    Ok(())
}

/// Branch phases `χ(t,x)` and mode displacements `α_m(t,x)` for every X
/// string `x`.
#[derive(Debug, Clone)]
pub struct BranchTable {
    pub n: usize,
    pub modes: usize,
    /// `χ(t,x) = Σ_{i<j} χ_{i,j} x_i x_j`, indexed by X-basis index.
    pub phases: Vec<f64>,
    /// `α_m(t,x)` stored at `x * modes + m`.
    pub alphas: Vec<Complex64>,
}

impl BranchTable {
    pub fn new(evo: &MsEvolution) -> Self {
        let n = evo.chi.nrows();
        let modes = evo.alpha.ncols();
        let dim = 1usize << n;
        let mut phases = Vec::with_capacity(dim);
        let mut alphas = Vec::with_capacity(dim * modes);
        for x in 0..dim {
            let s: Vec<f64> = spins(x, n).collect();
            let mut phase = 0.0;
            for i in 0..n {
                for j in i + 1..n {
                    phase += evo.chi[(i, j)] * s[i] * s[j];
                }
            }
            phases.push(phase);
            for m in 0..modes {
                let mut a = Complex64::new(0.0, 0.0);
                for i in 0..n {
                    a += evo.alpha[(i, m)] * s[i];
                }
                alphas.push(a);
            }
        }
        Self {
            n,
            modes,
            phases,
            alphas,
        }
    }

    pub fn alpha(&self, x: usize, m: usize) -> Complex64 {
        self.alphas[x * self.modes + m]
    }
}

/// Element-wise log of the reduced-density kernel,
/// `Z[x,x'] = −i(χ(x)−χ(x')) + Σ_m ln ε_m(x,x')`, so that
/// `ρ = ρ_in ⊙ exp(Z)`.
///
/// Every term is quadratic in the Rabi rates, so a common rescaling
/// `Ω → (1+Δ)Ω` maps `Z → (1+Δ)²Z`; [`DecoherenceKernel::apply_scaled`]
/// exploits this.
#[derive(Debug, Clone)]
pub struct DecoherenceKernel {
    n: usize,
    log: DMatrix<Complex64>,
}

impl DecoherenceKernel {
    pub fn new(branches: &BranchTable, nbars: &[f64]) -> Result<Self> {
        if nbars.len() != branches.modes {
            return Err(Error::Dimension {
                expected: branches.modes,
                got: nbars.len(),
            });
        }
        for &nb in nbars {
            check_nbar(nb)?;
        }
        let dim = branches.phases.len();
        let mut log = DMatrix::zeros(dim, dim);
        for r in 0..dim {
            for c in r + 1..dim {
                let mut z = -I * (branches.phases[r] - branches.phases[c]);
                for (m, &nb) in nbars.iter().enumerate() {
                    let a = branches.alpha(r, m);
                    let b = branches.alpha(c, m);
                    z += I * (a * b.conj()).im - (2.0 * nb + 1.0) * (a - b).norm_sqr() / 2.0;
                }
                log[(r, c)] = z;
                log[(c, r)] = z.conj();
            }
        }
        Ok(Self {
            n: branches.n,
            log,
        })
    }

    pub fn from_evolution(evo: &MsEvolution, nbars: &[f64]) -> Result<Self> {
        Self::new(&BranchTable::new(evo), nbars)
    }

    pub fn log(&self) -> &DMatrix<Complex64> {
        &self.log
    }

    /// `ρ_in ⊙ exp(Z)` for an X-basis input matrix.
    pub fn apply(&self, rho_x: &DMatrix<Complex64>) -> DMatrix<Complex64> {
        self.apply_scaled(rho_x, 1.0)
    }

    /// `ρ_in ⊙ exp(sZ)`.
    pub fn apply_scaled(&self, rho_x: &DMatrix<Complex64>, s: f64) -> DMatrix<Complex64> {
        let mut out = DMatrix::zeros(rho_x.nrows(), rho_x.ncols());
        self.accumulate_scaled(rho_x, s, 1.0, &mut out);
        out
    }

    /// `acc += w·(ρ_in ⊙ exp(sZ))`, touching the upper triangle once and
    /// mirroring so the result stays exactly Hermitian.
    pub fn accumulate_scaled(
        &self,
        rho_x: &DMatrix<Complex64>,
        s: f64,
        w: f64,
        acc: &mut DMatrix<Complex64>,
    ) {
        let dim = self.log.nrows();
        for c in 0..dim {
            acc[(c, c)] += rho_x[(c, c)] * w;
            for r in 0..c {
                let v = rho_x[(r, c)] * (self.log[(r, c)] * s).exp() * w;
                acc[(r, c)] += v;
                acc[(c, r)] += v.conj();
            }
        }
    }

    /// `acc += w·Σ_k w_k (ρ_in ⊙ exp((1+δ_k)² Z))` for evenly spaced offsets
    /// `δ_k`. Successive exponentials come from a multiplicative recurrence
    /// anchored at the first point, so `grid` should be short (a few dozen
    /// points) to keep rounding drift negligible.
    pub fn accumulate_rabi_average(
        &self,
        rho_x: &DMatrix<Complex64>,
        grid: &[(f64, f64)],
        w: f64,
        acc: &mut DMatrix<Complex64>,
    ) {
        if grid.len() < 3 {
            for &(d, wk) in grid {
                self.accumulate_scaled(rho_x, (1.0 + d) * (1.0 + d), w * wk, acc);
            }
            return;
        }
        let d0 = grid[0].0;
        let h = (grid[grid.len() - 1].0 - d0) / (grid.len() - 1) as f64;
        let s0 = (1.0 + d0) * (1.0 + d0);
        // s_{k+1} - s_k = h (2 + 2δ_k + h) grows by 2h² per step
        let first_step = h * (2.0 + 2.0 * d0 + h);
        let curvature = 2.0 * h * h;
        let total_w: f64 = grid.iter().map(|g| g.1).sum();
        let dim = self.log.nrows();
        for c in 0..dim {
            acc[(c, c)] += rho_x[(c, c)] * (w * total_w);
            for r in 0..c {
                let z = self.log[(r, c)];
                let mut e = (z * s0).exp();
                let mut ratio = (z * first_step).exp();
                let step = (z * curvature).exp();
                let mut sum = Complex64::new(0.0, 0.0);
                for &(_, wk) in grid {
                    sum += e * wk;
                    e *= ratio;
                    ratio *= step;
                }
                let v = rho_x[(r, c)] * sum * w;
                acc[(r, c)] += v;
                acc[(c, r)] += v.conj();
            }
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }
}

/// Checks an initial spin state and returns its X-basis matrix.
pub fn prepare_initial(initial: &SpinDensity, n: usize) -> Result<DMatrix<Complex64>> {
    if initial.n() != n {
        return Err(Error::Dimension {
            expected: n,
            got: initial.n(),
        });
    }
    initial.validate()?;
    Ok(initial.to_basis(Basis::X).into_matrix())
}

/// Reduced spin density after the MS interaction, in the X basis.
pub fn reduced_density(
    initial: &SpinDensity,
    config: &IonChainConfig,
    pulse: &MSPulse,
    t: f64,
    nbars: &[f64],
) -> Result<SpinDensity> {
    let rho_x = prepare_initial(initial, config.n())?;
    reduced_density_x(&rho_x, config, pulse, t, nbars)
}

/// [`reduced_density`] on an already-validated X-basis matrix.
pub fn reduced_density_x(
    rho_x: &DMatrix<Complex64>,
    config: &IonChainConfig,
    pulse: &MSPulse,
    t: f64,
    nbars: &[f64],
) -> Result<SpinDensity> {
    let evo = MsEvolution::new(config, pulse, t)?;
    let kernel = DecoherenceKernel::from_evolution(&evo, nbars)?;
    SpinDensity::from_matrix_unchecked(config.n(), Basis::X, kernel.apply(rho_x))
}

/// Z-basis outcome distribution.
pub fn measurement_probs(rho: &SpinDensity) -> Vec<f64> {
    rho.probabilities()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constants::{default_wavevector, hz, YB171_MASS};
    use crate::ion::{ising_couplings, loop_time};
    use std::f64::consts::PI;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn two_ion() -> (IonChainConfig, MSPulse) {
        let chain = IonChainConfig::with_ideal_eigenvectors(
            vec![hz(1.7331e6), hz(1.6641e6)],
            default_wavevector(),
            YB171_MASS,
        )
        .unwrap();
        let pulse = MSPulse::uniform(&chain, 1, hz(-6.57e3), hz(26.552e3), 0.0).unwrap();
        (chain, pulse)
    }

    #[test]
    fn zero_time_is_identity() {
        let (chain, pulse) = two_ion();
        let evo = MsEvolution::new(&chain, &pulse, 0.0).unwrap();
        assert_eq!(evo.chi.amax(), 0.0);
        assert!(evo.alpha.iter().all(|a| a.norm() < 1e-18));
        let rho = SpinDensity::basis_state(2, Basis::Z, 0).unwrap();
        let out = reduced_density(&rho, &chain, &pulse, 0.0, &[0.0, 0.0]).unwrap();
        assert!(out.trace_distance(&rho).unwrap() < 1e-14);
    }

    #[test]
    fn bell_phase() {
        let (chain, pulse) = two_ion();
        let t = 3.0 * loop_time(&pulse, &chain).unwrap();
        let chi = geometric_phase(&chain, &pulse, t).unwrap();
        assert!((chi[(0, 1)] - PI / 4.0).abs() < 2e-2, "{}", chi[(0, 1)]);
        let rho = SpinDensity::basis_state(2, Basis::Z, 0).unwrap();
        let out = reduced_density(&rho, &chain, &pulse, t, &[0.0, 0.0]).unwrap();
        let s = 0.5f64.sqrt();
        let bell =
            SpinDensity::from_pure(2, Basis::Z, &[c(s, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(0.0, -s)])
                .unwrap();
        assert!(out.trace_distance(&bell).unwrap() < 0.02);
        let p = measurement_probs(&out);
        assert!((p[0] - 0.5).abs() < 0.01 && (p[3] - 0.5).abs() < 0.01);
        assert!(p[1] < 0.01 && (p[1] - p[2]).abs() < 1e-12);
    }

    #[test]
    fn rabi_recurrence_matches_direct_sum() {
        let (chain, pulse) = two_ion();
        let t = 2.3 * loop_time(&pulse, &chain).unwrap();
        let kernel = DecoherenceKernel::from_evolution(&MsEvolution::new(&chain, &pulse, t).unwrap(), &[0.5, 0.5]).unwrap();
        let rho = prepare_initial(&SpinDensity::basis_state(2, Basis::Z, 0).unwrap(), 2).unwrap();
        let grid: Vec<(f64, f64)> = (0..25).map(|k| (-0.045 + k as f64 * 0.0036, 0.01 + 0.001 * k as f64)).collect();
        let mut fast = DMatrix::zeros(4, 4);
        kernel.accumulate_rabi_average(&rho, &grid, 0.7, &mut fast);
        let mut direct = DMatrix::zeros(4, 4);
        for &(d, w) in &grid {
            kernel.accumulate_scaled(&rho, (1.0 + d) * (1.0 + d), 0.7 * w, &mut direct);
        }
        assert!((fast - direct).iter().all(|z| z.norm() < 1e-14));
    }

    #[test]
    fn phase_tracks_coupling_at_long_times() {
        let (chain, pulse) = two_ion();
        let j = ising_couplings(&chain, &pulse).unwrap()[(0, 1)];
        let tl = loop_time(&pulse, &chain).unwrap();
        for k in [10.0, 20.0, 40.0] {
            let chi = geometric_phase(&chain, &pulse, k * tl).unwrap()[(0, 1)];
            assert!((chi - j * k * tl).abs() < 0.01 * (j * k * tl).abs());
        }
    }

    #[test]
    fn target_loop_nearly_closes() {
        let (chain, pulse) = two_ion();
        let tl = loop_time(&pulse, &chain).unwrap();
        let peak = (1..200)
            .map(|k| displacements(&chain, &pulse, k as f64 * tl / 200.0).unwrap()[(0, 1)].norm())
            .fold(0.0, f64::max);
        for k in 1..4 {
            let a = displacements(&chain, &pulse, k as f64 * tl).unwrap()[(0, 1)].norm();
            assert!(a < 0.05 * peak, "{a} vs {peak}");
        }
    }

    #[test]
    fn overlap_closed_forms() {
        assert_eq!(coherent_overlap(c(0.3, -0.2), c(0.3, -0.2)), c(1.0, 0.0));
        assert!((coherent_overlap(c(1.0, 0.0), c(0.0, 0.0)) - c((-0.5f64).exp(), 0.0)).norm() < 1e-15);
        let a = c(0.4, 0.1);
        let b = c(-0.2, 0.3);
        assert_eq!(thermal_decoherence(a, b, 0.0).unwrap(), coherent_overlap(a, b));
        let f = thermal_decoherence(c(1.0, 0.0), c(-1.0, 0.0), 0.5).unwrap();
        assert!((f.norm() - (-4.0f64).exp()).abs() < 1e-15);
        assert!((thermal_decoherence(a, a, 3.0).unwrap().norm() - 1.0).abs() < 1e-15);
        assert!(thermal_decoherence(a, b, -0.1).is_err());
    }

    #[test]
    fn singular_detuning() {
        let (chain, mut pulse) = two_ion();
        pulse.mu = chain.mode_freqs()[1];
        assert!(matches!(
            geometric_phase(&chain, &pulse, 1e-4),
            Err(Error::Singular(_))
        ));
    }

    #[test]
    fn branch_flip_symmetry() {
        let (chain, pulse) = two_ion();
        let evo = MsEvolution::new(&chain, &pulse, 37e-6).unwrap();
        let b = BranchTable::new(&evo);
        for x in 0..4 {
            let y = 3 - x;
            assert_eq!(b.phases[x], b.phases[y]);
            for m in 0..2 {
                assert!((b.alpha(x, m) + b.alpha(y, m)).norm() < 1e-15);
            }
        }
    }

    #[test]
    fn rejects_bad_nbar_length() {
        let (chain, pulse) = two_ion();
        let rho = SpinDensity::basis_state(2, Basis::Z, 0).unwrap();
        assert!(reduced_density(&rho, &chain, &pulse, 1e-5, &[0.0]).is_err());
    }
}
