mod common;

use common::*;
use msqaoa::constants::hz;
use msqaoa::ion::loop_time;
use msqaoa::noise::{
    bitflip_spam_matrix, compose_fluctuations, fit_bitflip_epsilon, spam_apply, FluctuationTarget,
    GaussianFluctuation, NoiseConfig, SpamModel,
};
use msqaoa::stats::{frequencies, sample_counts, stderr_prob};
use msqaoa::{Basis, IonChainConfig, MSPulse, SpinDensity};
use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn mode_noise(sigma_hz: f64, points: usize) -> GaussianFluctuation {
    GaussianFluctuation::new(FluctuationTarget::TargetModeFreq, hz(sigma_hz), points).unwrap()
}

fn rabi_noise(frac: f64) -> GaussianFluctuation {
    GaussianFluctuation::new(FluctuationTarget::RabiRateRelative, frac, 1000).unwrap()
}

/// Z-basis populations of `|00⟩` evolved under the noisy MS at each time.
fn trace(c: &IonChainConfig, p: &MSPulse, times: &[f64], noise: &NoiseConfig) -> Vec<Vec<f64>> {
    let rho = SpinDensity::basis_state(2, Basis::Z, 0).unwrap();
    times
        .iter()
        .map(|&t| {
            let out = compose_fluctuations(&rho, c, p, t, noise).unwrap();
            let probs = out.to_basis(Basis::Z).probabilities();
            match &noise.spam {
                Some(s) => spam_apply(s, &probs).unwrap(),
                None => probs,
            }
        })
        .collect()
}

fn loop_times(c: &IonChainConfig, p: &MSPulse, loops: f64, per_loop: usize) -> Vec<f64> {
    let tl = loop_time(p, c).unwrap();
    let steps = (loops * per_loop as f64) as usize;
    (0..=steps).map(|k| k as f64 * tl / per_loop as f64).collect()
}

fn contrast(xs: impl Iterator<Item = f64>) -> f64 {
    let (lo, hi) = xs.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), x| (lo.min(x), hi.max(x)));
    hi - lo
}

#[test]
fn ensemble_grid_is_converged() {
    let (c, p) = two_ion(BELL_RABI_HZ);
    let tl = loop_time(&p, &c).unwrap();
    let rho = SpinDensity::basis_state(2, Basis::Z, 0).unwrap();
    for t in [0.7 * tl, 3.0 * tl, 7.4 * tl] {
        let coarse = NoiseConfig {
            mode_fluct: Some(mode_noise(300.0, 1000)),
            nbar: vec![0.5],
            ..NoiseConfig::ideal()
        };
        let fine = NoiseConfig {
            mode_fluct: Some(mode_noise(300.0, 4000)),
            ..coarse.clone()
        };
        let a = compose_fluctuations(&rho, &c, &p, t, &coarse).unwrap();
        let b = compose_fluctuations(&rho, &c, &p, t, &fine).unwrap();
        assert!(a.trace_distance(&b).unwrap() < 1e-4);
    }
}

#[test]
fn mode_fluctuations_wash_out_contrast() {
    let (c, p) = two_ion(BELL_RABI_HZ);
    let times = loop_times(&c, &p, 24.0, 4);
    let ideal = trace(&c, &p, &times, &NoiseConfig::ideal());
    let noisy = trace(
        &c,
        &p,
        &times,
        &NoiseConfig {
            mode_fluct: Some(mode_noise(300.0, 1000)),
            ..NoiseConfig::ideal()
        },
    );
    let half = times.len() / 2;
    let ideal_late = contrast(ideal[half..].iter().map(|q| q[0]));
    let early = contrast(noisy[..half].iter().map(|q| q[0]));
    let late = contrast(noisy[half..].iter().map(|q| q[0]));
    assert!(late < early, "{late} vs {early}");
    assert!(late < ideal_late - 0.05, "{late} vs {ideal_late}");
    for q in &noisy {
        assert!((q[1] - q[2]).abs() < 1e-12);
    }
}

#[test]
fn rabi_fluctuations_leave_odd_parity_alone() {
    let (c, p) = two_ion(BELL_RABI_HZ);
    let times = loop_times(&c, &p, 6.0, 8);
    let base = NoiseConfig {
        mode_fluct: Some(mode_noise(300.0, 200)),
        nbar: vec![0.5],
        ..NoiseConfig::ideal()
    };
    let with_rabi = NoiseConfig {
        rabi_fluct: Some(rabi_noise(0.015)),
        ..base.clone()
    };
    let a = trace(&c, &p, &times, &base);
    let b = trace(&c, &p, &times, &with_rabi);
    for (x, y) in a.iter().zip(&b) {
        assert!((x[1] - y[1]).abs() < 1e-3);
        assert!((x[2] - y[2]).abs() < 1e-3);
    }
}

#[test]
fn thermal_occupation_raises_odd_parity_between_loops() {
    let (c, p) = two_ion(BELL_RABI_HZ);
    let tl = loop_time(&p, &c).unwrap();
    let cold = NoiseConfig::ideal();
    let warm = NoiseConfig {
        nbar: vec![0.5],
        ..NoiseConfig::ideal()
    };
    for k in 0..6 {
        let t = (k as f64 + 0.5) * tl;
        let a = trace(&c, &p, &[t], &cold)[0][1];
        let b = trace(&c, &p, &[t], &warm)[0][1];
        assert!(b > a + 1e-3, "t = {k}.5 loops: {b} vs {a}");
        let t = (k + 1) as f64 * tl;
        let a = trace(&c, &p, &[t], &cold)[0][1];
        let b = trace(&c, &p, &[t], &warm)[0][1];
        assert!((b - a).abs() < 1e-3);
    }
}

#[test]
fn spam_compresses_toward_uniform() {
    let (c, p) = two_ion(BELL_RABI_HZ);
    let times = loop_times(&c, &p, 6.0, 4);
    let clean = trace(&c, &p, &times, &NoiseConfig::ideal());
    let spam = trace(
        &c,
        &p,
        &times,
        &NoiseConfig {
            spam: Some(SpamModel::BitFlip(0.02)),
            ..NoiseConfig::ideal()
        },
    );
    let dist = |q: &[f64]| q.iter().map(|x| (x - 0.25).abs()).sum::<f64>();
    for (a, b) in clean.iter().zip(&spam) {
        assert!(dist(b) <= dist(a) + 1e-15);
    }
    assert!(contrast(spam.iter().map(|q| q[0])) < contrast(clean.iter().map(|q| q[0])));
}

fn sampled_matrix(n: usize, eps: f64, shots: u64, seed: u64) -> DMatrix<f64> {
    let exact = bitflip_spam_matrix(n, eps).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let dim = 1 << n;
    let mut m = DMatrix::zeros(dim, dim);
    for z in 0..dim {
        let col: Vec<f64> = exact.column(z).iter().copied().collect();
        for (zp, f) in frequencies(&sample_counts(&col, shots, &mut rng)).into_iter().enumerate() {
            m[(zp, z)] = f;
        }
    }
    m
}

#[test]
fn spam_fit_recovers_sampled_eps() {
    for n in [2, 3] {
        for seed in 0..10 {
            let m = sampled_matrix(n, 0.02, 4000, seed);
            let fit = fit_bitflip_epsilon(&m, 1e-4).unwrap();
            assert!((fit.eps - 0.02).abs() <= 0.005, "n={n} seed={seed}: {}", fit.eps);
        }
    }
    let exact = fit_bitflip_epsilon(&bitflip_spam_matrix(3, 0.02).unwrap(), 1e-4).unwrap();
    assert!((exact.eps - 0.02).abs() < 1e-9 && exact.distance < 1e-9);
    let id = fit_bitflip_epsilon(&DMatrix::identity(4, 4), 1e-4).unwrap();
    assert_eq!(id.eps, 0.0);
    assert!(id.distance < 1e-12);
}

#[test]
fn stderr_matches_sampling_spread() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let probs = [0.3, 0.1, 0.05, 0.55];
    let shots = 200;
    let reps = 4000;
    let draws: Vec<f64> = (0..reps)
        .map(|_| frequencies(&sample_counts(&probs, shots, &mut rng))[0])
        .collect();
    let mean = draws.iter().sum::<f64>() / reps as f64;
    let var = draws.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (reps - 1) as f64;
    let predicted = stderr_prob(probs[0], shots);
    assert!((var.sqrt() / predicted - 1.0).abs() < 0.05);
    assert!((mean - probs[0]).abs() < 3.0 * predicted / (reps as f64).sqrt());
}
