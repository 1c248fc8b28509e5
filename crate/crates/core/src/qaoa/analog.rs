use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::FRAC_PI_2;

use super::{approximation_ratio, MaxCutInstance};
use crate::density::{ry, rx, Basis, SpinDensity};
use crate::error::{Error, Result};
use crate::ion::{ising_couplings, loop_time, max_coupling, maxcut_weights, IonChainConfig, MSPulse};
use crate::noise::{compose_fluctuations_x, spam_apply, NoiseConfig};

/// Pulse settings realizing a QAOA angle γ.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AnalogSchedule {
    pub gamma: f64,
    pub n_loops: u32,
    /// Uniform Rabi rate Ω(γ) (rad/s).
    pub rabi: f64,
    /// `n_loops · t_loop` (s).
    pub duration: f64,
    pub gamma_mp: f64,
    pub rabi_mp: f64,
    pub loop_time: f64,
}

impl AnalogSchedule {
    /// One loop with the beams off, standing in for γ = 0.
    pub fn idle(gamma_mp: f64, rabi_mp: f64, loop_time: f64) -> Self {
        Self {
            gamma: 0.0,
            n_loops: 1,
            rabi: 0.0,
            duration: loop_time,
            gamma_mp,
            rabi_mp,
            loop_time,
        }
    }
}

/// Picks the fewest whole loops that reach γ at or below max power:
/// `n = ⌈γ/γ_mp⌉`, `Ω = Ω_mp √(γ/(n γ_mp))`, `t = n t_loop`.
pub fn compile_gamma(
    gamma: f64,
    gamma_mp: f64,
    rabi_mp: f64,
    loop_time: f64,
) -> Result<AnalogSchedule> {
    if !(gamma > 0.0 && gamma.is_finite()) {
        return Err(Error::invalid(format!("gamma must be positive, got {gamma}")));
    }
    if !(gamma_mp > 0.0 && rabi_mp > 0.0 && loop_time > 0.0) {
        return Err(Error::invalid("gamma_mp, rabi_mp and loop_time must be positive"));
    }
    let ratio = gamma / gamma_mp;
    let n_loops = ((ratio * (1.0 - 1e-12)).ceil() as u32).max(1);
    Ok(AnalogSchedule {
        gamma,
        n_loops,
        rabi: rabi_mp * (ratio / n_loops as f64).sqrt(),
        duration: n_loops as f64 * loop_time,
        gamma_mp,
        rabi_mp,
        loop_time,
    })
}

/// Analog p = 1 QAOA on an ion chain.
///
/// The circuit is `|0…0⟩ → R_Y(π/2)` (preparing `|+⟩ⁿ`), then the cost layer
/// `R_Y(π/2) · MS · R_Y(−π/2)`, then the mixer, then measurement and SPAM.
/// The MS layer realizes `e^{+iγC}` up to a global phase, so the mixer is
/// applied as `e^{+iβB}`; the resulting state is the complex conjugate of the
/// ideal `|γ, β⟩` and has identical measurement statistics.
#[derive(Debug, Clone)]
pub struct AnalogQaoa {
    config: IonChainConfig,
    template: MSPulse,
    loop_time: f64,
    /// `J_max` per unit `Ω²`.
    coupling_per_rabi2: f64,
    rabi_mp: f64,
    gamma_mp: f64,
    couplings: DMatrix<f64>,
    instance: MaxCutInstance,
    initial_x: DMatrix<Complex64>,
}

impl AnalogQaoa {
    /// `template` fixes `μ` and the target mode; its Rabi rates and duration
    /// are ignored.
    pub fn new(config: &IonChainConfig, template: &MSPulse, rabi_mp: f64) -> Result<Self> {
        if !(rabi_mp > 0.0 && rabi_mp.is_finite()) {
            return Err(Error::invalid("rabi_mp must be positive"));
        }
        template.validate(config)?;
        let unit = template.with_rabi(1.0);
        let couplings = ising_couplings(config, &unit)?;
        let coupling_per_rabi2 = max_coupling(&couplings);
        let instance = MaxCutInstance::new(maxcut_weights(&couplings)?)?;
        let t_loop = loop_time(template, config)?;
        let n = config.n();
        let plus = SpinDensity::basis_state(n, Basis::Z, 0)?.apply_global_unitary(&ry(FRAC_PI_2));
        let initial_x = plus
            .apply_global_unitary(&ry(FRAC_PI_2))
            .to_basis(Basis::X)
            .into_matrix();
        Ok(Self {
            config: config.clone(),
            template: template.clone(),
            loop_time: t_loop,
            coupling_per_rabi2,
            rabi_mp,
            gamma_mp: 2.0 * coupling_per_rabi2 * rabi_mp * rabi_mp * t_loop,
            couplings: couplings * (rabi_mp * rabi_mp),
            instance,
            initial_x,
        })
    }

    pub fn config(&self) -> &IonChainConfig {
        &self.config
    }

    pub fn instance(&self) -> &MaxCutInstance {
        &self.instance
    }

    /// Ising couplings at max power (rad/s).
    pub fn couplings(&self) -> &DMatrix<f64> {
        &self.couplings
    }

    pub fn loop_time(&self) -> f64 {
        self.loop_time
    }

    pub fn rabi_mp(&self) -> f64 {
        self.rabi_mp
    }

    /// Angle reached in one loop at max power, `2 J_max(Ω_mp) t_loop`.
    pub fn gamma_mp(&self) -> f64 {
        self.gamma_mp
    }

    /// `J_max` per unit `Ω²`.
    pub fn coupling_per_rabi2(&self) -> f64 {
        self.coupling_per_rabi2
    }

    /// γ = 0 maps to [`AnalogSchedule::idle`].
    pub fn schedule(&self, gamma: f64) -> Result<AnalogSchedule> {
        if gamma == 0.0 {
            return Ok(AnalogSchedule::idle(self.gamma_mp, self.rabi_mp, self.loop_time));
        }
        compile_gamma(gamma, self.gamma_mp, self.rabi_mp, self.loop_time)
    }

    pub fn pulse(&self, schedule: &AnalogSchedule) -> MSPulse {
        self.template
            .with_rabi(schedule.rabi)
            .with_duration(schedule.duration)
    }

    /// Z-basis state after the cost layer, before the mixer.
    pub fn cost_layer(&self, schedule: &AnalogSchedule, noise: &NoiseConfig) -> Result<SpinDensity> {
        noise.validate(self.config.n())?;
        let pulse = self.pulse(schedule);
        let rho = compose_fluctuations_x(&self.initial_x, &self.config, &pulse, pulse.duration, noise)?;
        Ok(rho.to_basis(Basis::Z).apply_global_unitary(&ry(-FRAC_PI_2)))
    }

    /// Applies the mixer `e^{+iβB}` to a Z-basis state.
    pub fn mix(&self, rho: &SpinDensity, beta: f64) -> SpinDensity {
        rho.to_basis(Basis::Z).apply_global_unitary(&rx(-2.0 * beta))
    }

    /// Measured distribution of a Z-basis state, including SPAM.
    pub fn measure(&self, rho: &SpinDensity, noise: &NoiseConfig) -> Result<Vec<f64>> {
        let probs = rho.probabilities();
        match &noise.spam {
            Some(spam) => spam_apply(spam, &probs),
            None => Ok(probs),
        }
    }

    pub fn probabilities(&self, gamma: f64, beta: f64, noise: &NoiseConfig) -> Result<Vec<f64>> {
        let rho = analog_qaoa_density(self, &self.schedule(gamma)?, beta, noise)?;
        self.measure(&rho, noise)
    }

    pub fn ratio(&self, gamma: f64, beta: f64, noise: &NoiseConfig) -> Result<f64> {
        let probs = self.probabilities(gamma, beta, noise)?;
        approximation_ratio(self.instance.expectation(&probs), &self.instance)
    }
}

/// Pre-measurement Z-basis density of the analog QAOA circuit.
pub fn analog_qaoa_density(
    pipeline: &AnalogQaoa,
    schedule: &AnalogSchedule,
    beta: f64,
    noise: &NoiseConfig,
) -> Result<SpinDensity> {
    Ok(pipeline.mix(&pipeline.cost_layer(schedule, noise)?, beta))
}
