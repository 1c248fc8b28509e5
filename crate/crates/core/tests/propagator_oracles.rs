mod common;

use common::*;
use msqaoa::constants::hz;
use msqaoa::ion::loop_time;
use msqaoa::oracle::{displacement_operator, fock_reduced_density, FockTruncation, ModeState};
use msqaoa::propagator::{coherent_overlap, displacements, geometric_phase, reduced_density};
use msqaoa::{Basis, IonChainConfig, MSPulse, SpinDensity};
use nalgebra::DMatrix;
use num_complex::Complex64;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Random chain with identity eigenvectors and arbitrary η.
fn random_config(rng: &mut ChaCha8Rng, n: usize) -> (IonChainConfig, MSPulse) {
    let freqs: Vec<f64> = (0..n).map(|m| hz(1.9e6 - 0.12e6 * m as f64 + rng.gen_range(-2e4..2e4))).collect();
    let eta = DMatrix::from_fn(n, n, |_, _| rng.gen_range(-0.1..0.1));
    let config = IonChainConfig::new(freqs, DMatrix::identity(n, n), eta).unwrap();
    let target = rng.gen_range(0..n);
    let det = hz(rng.gen_range(3e3..20e3)) * if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
    let rabi = (0..n).map(|_| hz(rng.gen_range(10e3..40e3))).collect();
    let mu = config.mode_freqs()[target] + det;
    let pulse = MSPulse::new(&config, mu, rabi, 0.0, target).unwrap();
    (config, pulse)
}

#[test]
fn phase_matches_time_ordered_integration() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..4 {
        let (config, pulse) = random_config(&mut rng, 2);
        let t = rng.gen_range(10e-6..250e-6);
        let closed = geometric_phase(&config, &pulse, t).unwrap()[(0, 1)];
        let ode = chi_by_ode(&config, &pulse, t, 0, 1);
        assert!((closed - ode).abs() < 1e-6 * closed.abs().max(1e-2), "{closed} vs {ode}");
    }
}

#[test]
fn phase_sign_on_bell_configuration() {
    let (config, pulse) = two_ion(BELL_RABI_HZ);
    let t = 3.0 * loop_time(&pulse, &config).unwrap();
    let closed = geometric_phase(&config, &pulse, t).unwrap()[(0, 1)];
    let ode = chi_by_ode(&config, &pulse, t, 0, 1);
    assert!((closed - ode).abs() < 1e-6);
    assert!(closed > 0.0);
}

#[test]
fn displacement_matches_quadrature() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    for _ in 0..6 {
        let n = rng.gen_range(2..4);
        let (config, pulse) = random_config(&mut rng, n);
        let t = rng.gen_range(1e-6..300e-6);
        let alpha = displacements(&config, &pulse, t).unwrap();
        for i in 0..n {
            for m in 0..n {
                let q = alpha_by_quadrature(&config, &pulse, t, i, m);
                assert!((alpha[(i, m)] - q).norm() < 1e-9 * alpha.column(m).iter().map(|z| z.norm()).fold(1e-6, f64::max));
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn overlap_matches_fock_inner_product(ar in -1.5f64..1.5, ai in -1.5f64..1.5, br in -1.5f64..1.5, bi in -1.5f64..1.5) {
        let a = Complex64::new(ar, ai);
        let b = Complex64::new(br, bi);
        let da = displacement_operator(a, 70);
        let db = displacement_operator(b, 70);
        let fock = db.column(0).dotc(&da.column(0));
        prop_assert!((fock - coherent_overlap(a, b)).norm() < 1e-12);
    }
}

fn oracle_distance(config: &IonChainConfig, pulse: &MSPulse, t: f64, nbar: f64, initial: &SpinDensity, cutoff: usize) -> f64 {
    let n = config.n();
    let analytic = reduced_density(initial, config, pulse, t, &vec![nbar; n]).unwrap();
    let modes = if nbar == 0.0 { ModeState::Ground } else { ModeState::Thermal(nbar) };
    let fock = fock_reduced_density(initial, modes, config, pulse, t, FockTruncation::new(cutoff)).unwrap();
    assert!((fock.density.trace().re - 1.0).abs() < 1e-10);
    analytic.trace_distance(&fock.density).unwrap()
}

#[test]
fn oracle_agrees_on_bell_run() {
    let (config, pulse) = two_ion(BELL_RABI_HZ);
    let t = 3.0 * loop_time(&pulse, &config).unwrap();
    let rho = SpinDensity::basis_state(2, Basis::Z, 0).unwrap();
    assert!(oracle_distance(&config, &pulse, t, 0.0, &rho, 40) < 1e-6);
    assert!(oracle_distance(&config, &pulse, 0.37 * t, 0.5, &rho, 60) < 1e-5);
}

#[test]
fn oracle_converges_with_cutoff() {
    let (config, pulse) = three_ion(THREE_ION_RABI_MP_HZ);
    let t = 0.5 * loop_time(&pulse, &config).unwrap();
    let rho = SpinDensity::basis_state(3, Basis::Z, 0).unwrap();
    let analytic = reduced_density(&rho, &config, &pulse, t, &[0.0; 3]).unwrap();
    let mut last = f64::INFINITY;
    for cutoff in [12, 16, 20, 26, 34] {
        let trunc = FockTruncation { cutoff, leakage_bound: 1.0 };
        let out = fock_reduced_density(&rho, ModeState::Ground, &config, &pulse, t, trunc).unwrap();
        let d = analytic.trace_distance(&out.density).unwrap();
        assert!(d <= last + 1e-12, "cutoff {cutoff}: {d} > {last}");
        last = d;
    }
    assert!(last < 1e-9);
}
