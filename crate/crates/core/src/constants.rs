//! Physical constants and unit helpers.
//!
//! Angular frequencies are carried in rad/s everywhere inside the crate.
//! Configuration surfaces take Hz and convert with [`hz`].

use std::f64::consts::PI;

pub const TWO_PI: f64 = 2.0 * PI;

/// Reduced Planck constant (J·s).
pub const HBAR: f64 = 1.054_571_817e-34;

/// Unified atomic mass unit (kg).
pub const ATOMIC_MASS_UNIT: f64 = 1.660_539_066_60e-27;

/// Mass of a ¹⁷¹Yb⁺ ion (kg).
pub const YB171_MASS: f64 = 170.936_323 * ATOMIC_MASS_UNIT;

/// Wavelength of the Raman beams (m).
pub const RAMAN_WAVELENGTH: f64 = 355e-9;

/// Crossing angle of the two Raman beams (rad).
pub const RAMAN_CROSSING_ANGLE: f64 = PI / 2.0;

/// Converts a frequency in Hz to an angular frequency in rad/s.
#[inline]
pub fn hz(f: f64) -> f64 {
    TWO_PI * f
}

/// Converts an angular frequency in rad/s to Hz.
#[inline]
pub fn to_hz(omega: f64) -> f64 {
    omega / TWO_PI
}

/// Magnitude of the wavevector difference of two beams of equal wavelength
/// crossing at `angle`: `Δk = 2·(2π/λ)·sin(angle/2)`.
pub fn raman_wavevector(wavelength: f64, angle: f64) -> f64 {
    2.0 * (TWO_PI / wavelength) * (angle / 2.0).sin()
}

/// `Δk` for two 355 nm beams at 90°, i.e. `√2·2π/355 nm`.
pub fn default_wavevector() -> f64 {
    raman_wavevector(RAMAN_WAVELENGTH, RAMAN_CROSSING_ANGLE)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ninety_degree_wavevector() {
        let expected = 2f64.sqrt() * TWO_PI / 355e-9;
        assert!((default_wavevector() - expected).abs() / expected < 1e-14);
    }

    #[test]
    fn hz_round_trip() {
        assert!((to_hz(hz(1.0e3)) - 1.0e3).abs() < 1e-12);
    }
}
