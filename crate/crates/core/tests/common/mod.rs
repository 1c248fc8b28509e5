#![allow(dead_code)]

use msqaoa::constants::{default_wavevector, hz, YB171_MASS};
use msqaoa::{IonChainConfig, MSPulse};
use num_complex::Complex64;

pub const TWO_ION_MHZ: [f64; 2] = [1.7331, 1.6641];
pub const THREE_ION_MHZ: [f64; 3] = [1.7328, 1.6635, 1.5615];
pub const SIX_ION_MHZ: [f64; 6] = [1.7398, 1.6989, 1.6363, 1.5555, 1.4554, 1.3324];

pub const BELL_RABI_HZ: f64 = 26.552e3;
pub const THREE_ION_RABI_MP_HZ: f64 = 26.894e3;
pub const SIX_ION_RABI_MP_HZ: f64 = 28.29e3;

pub fn chain(freqs_mhz: &[f64]) -> IonChainConfig {
    IonChainConfig::with_ideal_eigenvectors(
        freqs_mhz.iter().map(|f| hz(f * 1e6)).collect(),
        default_wavevector(),
        YB171_MASS,
    )
    .unwrap()
}

pub fn two_ion(rabi_hz: f64) -> (IonChainConfig, MSPulse) {
    let c = chain(&TWO_ION_MHZ);
    let p = MSPulse::uniform(&c, 1, hz(-6.57e3), hz(rabi_hz), 0.0).unwrap();
    (c, p)
}

pub fn three_ion(rabi_hz: f64) -> (IonChainConfig, MSPulse) {
    let c = chain(&THREE_ION_MHZ);
    let p = MSPulse::uniform(&c, 2, hz(-5.26e3), hz(rabi_hz), 0.0).unwrap();
    (c, p)
}

pub fn six_ion(rabi_hz: f64) -> (IonChainConfig, MSPulse) {
    let c = chain(&SIX_ION_MHZ);
    let p = MSPulse::uniform(&c, 3, hz(-6.20e3), hz(rabi_hz), 0.0).unwrap();
    (c, p)
}

/// Gauss–Legendre nodes and weights on [-1, 1].
pub fn gauss_legendre(order: usize) -> Vec<(f64, f64)> {
    let mut out = Vec::with_capacity(order);
    for k in 0..order {
        let mut x = (std::f64::consts::PI * (k as f64 + 0.75) / (order as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for j in 2..=order {
                let p2 = ((2 * j - 1) as f64 * x * p1 - (j - 1) as f64 * p0) / j as f64;
                p0 = p1;
                p1 = p2;
            }
            dp = order as f64 * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        out.push((x, 2.0 / ((1.0 - x * x) * dp * dp)));
    }
    out
}

/// Composite Gauss–Legendre integral of a complex integrand on [a, b].
pub fn integrate<F: Fn(f64) -> Complex64>(f: F, a: f64, b: f64, panels: usize) -> Complex64 {
    let rule = gauss_legendre(10);
    let h = (b - a) / panels as f64;
    let mut s = Complex64::new(0.0, 0.0);
    for p in 0..panels {
        let mid = a + (p as f64 + 0.5) * h;
        for (x, w) in &rule {
            s += f(mid + 0.5 * h * x) * (0.5 * h * w);
        }
    }
    s
}

/// `α_{i,m}(t) = −iη_{i,m}Ω_i ∫₀ᵗ sin(μt') e^{iω_m t'} dt'` by quadrature.
pub fn alpha_by_quadrature(config: &IonChainConfig, pulse: &MSPulse, t: f64, i: usize, m: usize) -> Complex64 {
    let w = config.mode_freqs()[m];
    let panels = ((pulse.mu * t / 2.0).ceil() as usize).max(8);
    let integral = integrate(|s| Complex64::from_polar((pulse.mu * s).sin(), w * s), 0.0, t, panels);
    -Complex64::i() * config.lamb_dicke()[(i, m)] * pulse.rabi[i] * integral
}

/// Time-ordered second-order phase
/// `χ_ij = −2Ω_iΩ_j Σ_m η_im η_jm ∫₀ᵗdt₁∫₀^{t₁}dt₂ sin μt₁ sin μt₂ sin ω_m(t₁−t₂)`
/// integrated as the ODE `Ḟ = sin μt e^{−iωt}`,
/// `χ̇ = −2ΩΩηη sin μt Im[e^{iωt}F]` with classical RK4.
pub fn chi_by_ode(config: &IonChainConfig, pulse: &MSPulse, t: f64, i: usize, j: usize) -> f64 {
    let mu = pulse.mu;
    let steps = ((mu * t / (2.0 * std::f64::consts::PI)) * 400.0).ceil().max(400.0) as usize;
    let h = t / steps as f64;
    let eta = config.lamb_dicke();
    let mut total = 0.0;
    for (m, &w) in config.mode_freqs().iter().enumerate() {
        let k = -2.0 * pulse.rabi[i] * pulse.rabi[j] * eta[(i, m)] * eta[(j, m)];
        let deriv = |s: f64, f: Complex64| -> (Complex64, f64) {
            let df = Complex64::from_polar((mu * s).sin(), -w * s);
            let dchi = k * (mu * s).sin() * (Complex64::from_polar(1.0, w * s) * f).im;
            (df, dchi)
        };
        let mut f = Complex64::new(0.0, 0.0);
        let mut chi = 0.0;
        for n in 0..steps {
            let s = n as f64 * h;
            let (f1, c1) = deriv(s, f);
            let (f2, c2) = deriv(s + h / 2.0, f + f1 * (h / 2.0));
            let (f3, c3) = deriv(s + h / 2.0, f + f2 * (h / 2.0));
            let (f4, c4) = deriv(s + h, f + f3 * h);
            f += (f1 + f2 * 2.0 + f3 * 2.0 + f4) * (h / 6.0);
            chi += (c1 + 2.0 * c2 + 2.0 * c3 + c4) * h / 6.0;
        }
        total += chi;
    }
    total
}
