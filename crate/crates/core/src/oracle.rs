//! Truncated-Fock reference for the reduced spin density.
//!
//! Each X-string branch displaces every mode by an explicit matrix
//! exponential `exp(α a† − α* a)` on a truncated oscillator. Mode overlaps
//! are traced per mode, which equals the full partial trace because the
//! initial vibrational state is a product over modes.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::density::{Basis, SpinDensity};
use crate::error::{Error, Result};
use crate::ion::{IonChainConfig, MSPulse};
use crate::propagator::{prepare_initial, BranchTable, MsEvolution};

pub const MAX_ORACLE_IONS: usize = 3;
pub const MAX_CUTOFF: usize = 400;
pub const DEFAULT_LEAKAGE_BOUND: f64 = 1e-10;
const THERMAL_TAIL: f64 = 1e-10;

/// Oscillator truncation: levels `0..cutoff` are kept and accepted runs must
/// leave less than `leakage_bound` population in the guard band at the top.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FockTruncation {
    pub cutoff: usize,
    pub leakage_bound: f64,
}

impl FockTruncation {
    pub fn new(cutoff: usize) -> Self {
        Self {
            cutoff,
            leakage_bound: DEFAULT_LEAKAGE_BOUND,
        }
    }

    fn guard(&self) -> usize {
        (self.cutoff / 10).max(2)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ModeState {
    Ground,
    /// Thermal state with the given mean occupation for every mode.
    Thermal(f64),
}

#[derive(Debug, Clone)]
pub struct OracleOutput {
    /// Reduced spin density in the X basis.
    pub density: SpinDensity,
    /// Largest guard-band population over all displaced Fock states.
    pub leakage: f64,
}

/// `p(k) = ν̄^k/(ν̄+1)^{k+1}` truncated once the remaining tail is below
/// 1e-10 and renormalized.
pub fn thermal_weights(nbar: f64) -> Result<Vec<f64>> {
    if !(nbar >= 0.0 && nbar.is_finite()) {
        return Err(Error::invalid("thermal occupation must be non-negative"));
    }
    if nbar == 0.0 {
        return Ok(vec![1.0]);
    }
    let q = nbar / (nbar + 1.0);
    let mut w = Vec::new();
    let mut p = 1.0 / (nbar + 1.0);
    // tail beyond level k is q^{k+1}
    let mut tail = q;
    while tail >= THERMAL_TAIL {
        w.push(p);
        p *= q;
        tail *= q;
    }
    w.push(p);
    let total: f64 = w.iter().sum();
    Ok(w.into_iter().map(|x| x / total).collect())
}

/// Truncated `D(α) = exp(α a† − α* a)`.
pub fn displacement_operator(alpha: Complex64, cutoff: usize) -> DMatrix<Complex64> {
    let mut gen = DMatrix::zeros(cutoff, cutoff);
    for k in 1..cutoff {
        let s = (k as f64).sqrt();
        gen[(k, k - 1)] = alpha * s;
        gen[(k - 1, k)] = -alpha.conj() * s;
    }
    gen.exp()
}

/// Reduced spin density after the MS propagator acts on `initial ⊗ modes`,
/// computed in a truncated Fock space.
pub fn fock_reduced_density(
    initial: &SpinDensity,
    modes: ModeState,
    config: &IonChainConfig,
    pulse: &MSPulse,
    t: f64,
    trunc: FockTruncation,
) -> Result<OracleOutput> {
    let n = config.n();
    if n > MAX_ORACLE_IONS {
        return Err(Error::invalid(format!(
            "oracle supports at most {MAX_ORACLE_IONS} ions"
        )));
    }
    if trunc.cutoff < 4 || trunc.cutoff > MAX_CUTOFF {
        return Err(Error::invalid(format!(
            "cutoff must be between 4 and {MAX_CUTOFF}"
        )));
    }
    let rho_x = prepare_initial(initial, n)?;
    let weights = match modes {
        ModeState::Ground => vec![1.0],
        ModeState::Thermal(nbar) => thermal_weights(nbar)?,
    };
    if weights.len() + trunc.guard() > trunc.cutoff {
        return Err(Error::Truncation {
            leakage: 1.0,
            bound: trunc.leakage_bound,
            cutoff: trunc.cutoff,
        });
    }
    let evo = MsEvolution::new(config, pulse, t)?;
    let branches = BranchTable::new(&evo);
    let dim = 1usize << n;
    let guard_start = trunc.cutoff - trunc.guard();
    let mut leakage = 0.0f64;
    // overlap[m][(x, x')] = Σ_k p(k) ⟨k|D(α_m(x'))† D(α_m(x))|k⟩
    let mut factor = DMatrix::from_element(dim, dim, Complex64::new(1.0, 0.0));
    for m in 0..branches.modes {
        let displaced: Vec<Vec<DVector<Complex64>>> = (0..dim)
            .map(|x| {
                let d = displacement_operator(branches.alpha(x, m), trunc.cutoff);
                (0..weights.len()).map(|k| d.column(k).clone_owned()).collect()
            })
            .collect();
        for states in &displaced {
            for v in states {
                let tail: f64 = v.iter().skip(guard_start).map(|z| z.norm_sqr()).sum();
                leakage = leakage.max(tail);
            }
        }
        for x in 0..dim {
            for y in 0..dim {
                let mut s = Complex64::new(0.0, 0.0);
                for (k, p) in weights.iter().enumerate() {
                    s += displaced[y][k].dotc(&displaced[x][k]) * *p;
                }
                factor[(x, y)] *= s;
            }
        }
    }
    if leakage > trunc.leakage_bound {
        return Err(Error::Truncation {
            leakage,
            bound: trunc.leakage_bound,
            cutoff: trunc.cutoff,
        });
    }
    let out = DMatrix::from_fn(dim, dim, |x, y| {
        let phase = Complex64::from_polar(1.0, -(branches.phases[x] - branches.phases[y]));
        rho_x[(x, y)] * phase * factor[(x, y)]
    });
    Ok(OracleOutput {
        density: SpinDensity::from_matrix_unchecked(n, Basis::X, out)?,
        leakage,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constants::{default_wavevector, hz, YB171_MASS};
    use crate::propagator::coherent_overlap;

    #[test]
    fn displacement_matches_coherent_overlap() {
        let a = Complex64::new(0.7, -0.3);
        let b = Complex64::new(-0.2, 0.5);
        let da = displacement_operator(a, 60);
        let db = displacement_operator(b, 60);
        let ov = db.column(0).dotc(&da.column(0));
        assert!((ov - coherent_overlap(a, b)).norm() < 1e-12);
    }

    #[test]
    fn thermal_weights_sum() {
        let w = thermal_weights(0.5).unwrap();
        assert!((w.iter().sum::<f64>() - 1.0).abs() < 1e-15);
        assert!((w[0] - 2.0 / 3.0).abs() < 1e-9);
        assert_eq!(thermal_weights(0.0).unwrap(), vec![1.0]);
    }

    #[test]
    fn zero_rabi_is_identity() {
        let chain = IonChainConfig::with_ideal_eigenvectors(
            vec![hz(1.7331e6), hz(1.6641e6)],
            default_wavevector(),
            YB171_MASS,
        )
        .unwrap();
        let pulse = MSPulse::uniform(&chain, 1, hz(-6.57e3), 0.0, 1e-4).unwrap();
        let rho = SpinDensity::basis_state(2, Basis::Z, 1).unwrap();
        let out = fock_reduced_density(&rho, ModeState::Thermal(0.5), &chain, &pulse, 1e-4, FockTruncation::new(40)).unwrap();
        assert!(out.density.trace_distance(&rho).unwrap() < 1e-14);
    }

    #[test]
    fn small_cutoff_is_rejected() {
        let chain = IonChainConfig::with_ideal_eigenvectors(
            vec![hz(1.7331e6), hz(1.6641e6)],
            default_wavevector(),
            YB171_MASS,
        )
        .unwrap();
        let pulse = MSPulse::uniform(&chain, 1, hz(-6.57e3), hz(60e3), 0.0).unwrap();
        let rho = SpinDensity::basis_state(2, Basis::Z, 0).unwrap();
        let err = fock_reduced_density(&rho, ModeState::Ground, &chain, &pulse, 70e-6, FockTruncation::new(6));
        assert!(matches!(err, Err(Error::Truncation { .. })));
    }
}
