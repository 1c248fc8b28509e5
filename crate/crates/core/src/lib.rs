//! Exact Mølmer–Sørensen dynamics for small trapped-ion chains, composable
//! experimental noise channels, and an analog QAOA layer built on top.
//!
//! Angular frequencies are in rad/s throughout; see [`constants::hz`].

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod constants;
pub mod density;
pub mod error;
pub mod ion;
pub mod noise;
pub mod oracle;
pub mod propagator;
pub mod qaoa;
pub mod stats;

pub use density::{Basis, SpinDensity};
pub use error::{Error, Result};
pub use ion::{IonChainConfig, MSPulse};
pub use noise::{FluctuationTarget, GaussianFluctuation, NoiseConfig, SpamModel};
pub use qaoa::{AnalogQaoa, AnalogSchedule, HeatmapGrid, MaxCutInstance};
