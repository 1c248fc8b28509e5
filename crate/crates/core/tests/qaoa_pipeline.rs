mod common;

use common::*;
use msqaoa::constants::hz;
use msqaoa::ion::{ising_couplings, maxcut_weights};
use msqaoa::noise::{FluctuationTarget, GaussianFluctuation};
use msqaoa::qaoa::{
    analog_qaoa_density, approximation_ratio, cost_of_bitstring, heatmap_sweep, ideal_ratio,
    AnalogQaoa, AnalogSchedule, Sampling,
};
use msqaoa::stats::stderr_cost_from_probs;
use msqaoa::{NoiseConfig, SpamModel};
use nalgebra::DMatrix;

fn three_ion_pipeline() -> AnalogQaoa {
    let (c, p) = three_ion(0.0);
    AnalogQaoa::new(&c, &p, hz(THREE_ION_RABI_MP_HZ)).unwrap()
}

fn six_ion_pipeline() -> AnalogQaoa {
    let (c, p) = six_ion(0.0);
    AnalogQaoa::new(&c, &p, hz(SIX_ION_RABI_MP_HZ)).unwrap()
}

fn axis(min: f64, max: f64, steps: usize) -> Vec<f64> {
    (0..steps).map(|k| min + (max - min) * k as f64 / (steps - 1) as f64).collect()
}

/// Schedule spreading γ over exactly `loops` loops.
fn forced(q: &AnalogQaoa, gamma: f64, loops: u32) -> AnalogSchedule {
    let ratio = gamma / q.gamma_mp();
    assert!(ratio <= loops as f64);
    AnalogSchedule {
        gamma,
        n_loops: loops,
        rabi: q.rabi_mp() * (ratio / loops as f64).sqrt(),
        duration: loops as f64 * q.loop_time(),
        gamma_mp: q.gamma_mp(),
        rabi_mp: q.rabi_mp(),
        loop_time: q.loop_time(),
    }
}

fn analog_ratio(q: &AnalogQaoa, s: &AnalogSchedule, beta: f64) -> f64 {
    let noise = NoiseConfig::ideal();
    let probs = q.measure(&analog_qaoa_density(q, s, beta, &noise).unwrap(), &noise).unwrap();
    approximation_ratio(q.instance().expectation(&probs), q.instance()).unwrap()
}

#[test]
fn three_ion_weights() {
    let (c, p) = three_ion(1.0);
    let w = maxcut_weights(&ising_couplings(&c, &p).unwrap()).unwrap();
    assert!((w[(0, 1)] - 1.0).abs() < 1e-12);
    assert!((w[(1, 2)] - 1.0).abs() < 1e-9);
    assert!((w[(0, 2)] + 0.470).abs() < 0.01, "{}", w[(0, 2)]);
}

#[test]
fn six_ion_weights() {
    #[rustfmt::skip]
    let expected = DMatrix::from_row_slice(6, 6, &[
        0.0, 0.574, 0.362, -0.263, -0.615, 0.378,
        0.574, 0.0, -0.584, 0.429, 1.0, -0.615,
        0.362, -0.584, 0.0, 0.187, 0.429, -0.263,
        -0.263, 0.429, 0.187, 0.0, -0.584, 0.362,
        -0.615, 1.0, 0.429, -0.584, 0.0, 0.574,
        0.378, -0.615, -0.263, 0.362, 0.574, 0.0,
    ]);
    let (c, p) = six_ion(1.0);
    let w = maxcut_weights(&ising_couplings(&c, &p).unwrap()).unwrap();
    assert!((w - expected).amax() < 2e-3);
}

#[test]
fn extreme_costs_by_enumeration() {
    for q in [three_ion_pipeline(), six_ion_pipeline()] {
        let inst = q.instance();
        let n = inst.n();
        let all: Vec<f64> = (0..1usize << n)
            .map(|z| {
                let s: Vec<i8> = (0..n).map(|i| if z >> i & 1 == 1 { -1 } else { 1 }).collect();
                cost_of_bitstring(inst, &s).unwrap()
            })
            .collect();
        let max = all.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let min = all.iter().copied().fold(f64::INFINITY, f64::min);
        assert_eq!(max, inst.c_max());
        assert_eq!(min, inst.c_min());
    }
    let inst = six_ion_pipeline().instance().clone();
    assert!((inst.c_max() - 4.2973).abs() < 2e-3);
    assert!((inst.c_min() + 0.3914).abs() < 2e-3);
}

#[test]
fn uniform_state_ratio() {
    let q = six_ion_pipeline();
    let inst = q.instance();
    let w = inst.weights();
    let mut half_sum = 0.0;
    for i in 0..inst.n() {
        for j in i + 1..inst.n() {
            half_sum += 0.5 * w[(i, j)];
        }
    }
    let expected = (half_sum - inst.c_min()) / (inst.c_max() - inst.c_min());
    let r = q.ratio(0.0, 0.0, &NoiseConfig::ideal()).unwrap();
    assert!((r - expected).abs() < 1e-12);
    assert!((ideal_ratio(inst, 0.0, 0.3).unwrap() - expected).abs() < 1e-12);
}

#[test]
fn analog_converges_to_ideal_with_more_loops() {
    let q = three_ion_pipeline();
    for loops in [3, 4, 6, 10] {
        let mut gap = 0.0f64;
        for gamma in [0.4, 0.9, 1.3408, 1.8] {
            let s = forced(&q, gamma, loops);
            for beta in axis(0.0, std::f64::consts::FRAC_PI_2, 9) {
                let ideal = ideal_ratio(q.instance(), gamma, beta).unwrap();
                gap = gap.max((analog_ratio(&q, &s, beta) - ideal).abs());
            }
        }
        assert!(gap < 0.02, "loops {loops}: gap {gap}");
    }
}

fn pixel_noise(kind: usize) -> NoiseConfig {
    let mut noise = NoiseConfig::ideal();
    match kind {
        0 => noise.spam = Some(SpamModel::BitFlip(0.02)),
        1 => {
            noise.mode_fluct =
                Some(GaussianFluctuation::new(FluctuationTarget::TargetModeFreq, hz(300.0), 1000).unwrap())
        }
        2 => noise.nbar = vec![0.5],
        _ => {
            noise.rabi_fluct =
                Some(GaussianFluctuation::new(FluctuationTarget::RabiRateRelative, 0.015, 1000).unwrap())
        }
    }
    noise
}

#[test]
fn noiseless_sweep_optimum() {
    let q = three_ion_pipeline();
    let grid = heatmap_sweep(
        &q,
        &NoiseConfig::ideal(),
        &axis(0.0, 3.0, 61),
        &axis(0.0, std::f64::consts::FRAC_PI_2, 41),
        200,
        Sampling::ExactExpectation,
    )
    .unwrap();
    let (gi, bi, r) = grid.argmax();
    assert!((r - 0.91).abs() < 0.02, "{r}");
    assert!((grid.gamma_axis[gi] - 1.34).abs() < 0.1);
    assert!((grid.beta_axis[bi] - 0.55).abs() < 0.1);
}

#[test]
fn sampled_pixels_scatter_within_error_bars() {
    let q = three_ion_pipeline();
    let gammas = axis(0.2, 2.0, 5);
    let betas = axis(0.1, 1.3, 5);
    let shots = 1_000_000;
    let noise = NoiseConfig { spam: Some(SpamModel::BitFlip(0.02)), ..NoiseConfig::ideal() };
    let exact = heatmap_sweep(&q, &noise, &gammas, &betas, shots, Sampling::ExactExpectation).unwrap();
    let sampled = heatmap_sweep(&q, &noise, &gammas, &betas, shots, Sampling::Sampled { seed: 11 }).unwrap();
    for k in 0..exact.values.len() {
        let z = (sampled.values[k] - exact.values[k]).abs() / exact.stderr[k];
        assert!(z < 3.0, "pixel {k}: {z} sigma");
    }
    let again = heatmap_sweep(&q, &noise, &gammas, &betas, shots, Sampling::Sampled { seed: 11 }).unwrap();
    assert_eq!(again, sampled);
}

#[test]
fn noise_damps_the_landscape() {
    let q = three_ion_pipeline();
    let gammas = axis(0.0, 3.0, 13);
    let betas = axis(0.0, std::f64::consts::FRAC_PI_2, 9);
    let ideal = heatmap_sweep(&q, &NoiseConfig::ideal(), &gammas, &betas, 200, Sampling::ExactExpectation).unwrap();
    let noise = NoiseConfig {
        mode_fluct: Some(GaussianFluctuation::new(FluctuationTarget::TargetModeFreq, hz(300.0), 100).unwrap()),
        rabi_fluct: Some(GaussianFluctuation::new(FluctuationTarget::RabiRateRelative, 0.015, 50).unwrap()),
        nbar: vec![0.5],
        spam: Some(SpamModel::BitFlip(0.02)),
    };
    let noisy = heatmap_sweep(&q, &noise, &gammas, &betas, 200, Sampling::ExactExpectation).unwrap();
    let span = |g: &msqaoa::HeatmapGrid| g.argmax().2 - g.min_value();
    assert!(span(&noisy) < span(&ideal));
    assert!(noisy.argmax().2 < ideal.argmax().2);
}

#[test]
fn single_channels_do_not_raise_the_optimum() {
    let q = three_ion_pipeline();
    let (g, b) = (1.3408, 0.5526);
    let clean = q.probabilities(g, b, &NoiseConfig::ideal()).unwrap();
    let r0 = approximation_ratio(q.instance().expectation(&clean), q.instance()).unwrap();
    let dr = stderr_cost_from_probs(&clean, q.instance().costs(), 200).unwrap()
        / (q.instance().c_max() - q.instance().c_min());
    for kind in 0..4 {
        let r = q.ratio(g, b, &pixel_noise(kind)).unwrap();
        assert!(r <= r0 + dr, "channel {kind}: {r} vs {r0}");
    }
}
